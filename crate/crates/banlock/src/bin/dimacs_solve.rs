//! Minimal DIMACS solver shim: reads one CNF file, prints the
//! SAT-competition `s`/`v` answer. Serves as the reference external
//! solver process for the pluggable backend.

use std::path::Path;
use std::process::ExitCode;

fn main() -> ExitCode {
    let Some(path) = std::env::args().nth(1) else {
        eprintln!("usage: dimacs-solve FILE.cnf");
        return ExitCode::from(2);
    };
    let mut solver: cadical::Solver = cadical::Solver::new();
    let max_var = match solver.read_dimacs(Path::new(&path)) {
        Ok(v) => v,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    match solver.solve() {
        Some(true) => {
            println!("s SATISFIABLE");
            let mut line = String::from("v");
            for v in 1..=max_var {
                let val = solver.value(v).unwrap_or(false);
                line.push_str(&format!(" {}", if val { v } else { -v }));
            }
            line.push_str(" 0");
            println!("{line}");
            ExitCode::from(10)
        }
        Some(false) => {
            println!("s UNSATISFIABLE");
            ExitCode::from(20)
        }
        None => {
            println!("s UNKNOWN");
            ExitCode::from(0)
        }
    }
}
