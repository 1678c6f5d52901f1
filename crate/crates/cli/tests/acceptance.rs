use omega_cli::acceptance::run_one;

// Runs without the libtest harness so each criterion line reaches the log.
fn main() {
    let mut failed = Vec::new();
    for id in 1..=10 {
        let c = run_one(id, 0);
        println!("{}", c.line());
        if !c.passed {
            failed.push(id);
        }
    }
    println!("acceptance: {}/10 criteria passed", 10 - failed.len());
    if !failed.is_empty() {
        eprintln!("failing criteria: {failed:?}");
        std::process::exit(1);
    }
}
