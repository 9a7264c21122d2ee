use std::process::ExitCode;

fn main() -> ExitCode {
    let passed = degenloop_validation::evaluate(|verdict| println!("{verdict}"));
    match degenloop_validation::bandit_probe() {
        Ok(line) => println!("probe m_star (not gating): {line}"),
        Err(e) => println!("probe m_star (not gating): error: {e}"),
    }
    if passed {
        println!("acceptance: all criteria passed");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: some criteria failed");
        ExitCode::FAILURE
    }
}
