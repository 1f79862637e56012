//! Runs a toy program and shows what the interpreter meters.
//!
//! ```text
//! cargo run --example run_toy_program
//! ```

use exforge::toylang::{run_source, Limits, RunStatus};

const PROGRAM: &str = "\
read n
alloc squares n
i = 0
while i < n {
  squares[i] = i * i
  i = i + 1
}
print squares[n - 1]
free squares
";

fn main() {
    let result = run_source(PROGRAM, "4", &Limits::default()).expect("program compiles");
    print!("{}", result.output);
    println!("status:     {:?}", result.status);
    println!("steps:      {}", result.metrics.steps);
    println!("peak cells: {}", result.metrics.peak_cells);
    println!("constructs: {:?}", result.metrics.trace);

    // The same program under a tight step budget.
    let tight = Limits { max_steps: 20, ..Limits::default() };
    let cut = run_source(PROGRAM, "4", &tight).unwrap();
    assert_eq!(cut.status, RunStatus::StepLimit);
    println!("with max_steps=20: {:?} after {} steps", cut.status, cut.metrics.steps);

    // Compile errors carry a position.
    let err = run_source("print (1 +", "", &Limits::default()).unwrap_err();
    println!("compile error: {err}");
}
