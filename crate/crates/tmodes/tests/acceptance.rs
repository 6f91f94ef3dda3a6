//! Acceptance gate: one PASS/FAIL line per criterion, nonzero exit status if
//! any criterion fails. Runs at full scale (M = 10⁴, 4σ gates).

use std::process::ExitCode;

use tmodes::verify::{
    closed_form_vs_laplace, conservation_and_determinism, figure_properties, freezing,
    integral_equation_residual, monte_carlo_vs_closed_form, pure_oscillation,
    renewal_vs_closed_form, transition_point, CheckResult, VerifyOptions, VerifyScale,
};
use tmodes::AppResult;

const TITLES: [&str; 8] = [
    "closed form vs Laplace inversion",
    "Monte Carlo vs closed form",
    "renewal solver vs closed form",
    "integral-equation residual",
    "transition point",
    "pure-oscillation limit",
    "freezing",
    "conservation and determinism",
];

fn criterion(n: usize, opts: &VerifyOptions) -> AppResult<Vec<CheckResult>> {
    match n {
        1 => closed_form_vs_laplace(opts.order),
        2 => monte_carlo_vs_closed_form(opts),
        3 => renewal_vs_closed_form(),
        4 => integral_equation_residual(),
        5 => transition_point(),
        6 => pure_oscillation(),
        7 => {
            let mut checks = freezing(opts)?;
            checks.extend(figure_properties()?);
            Ok(checks)
        }
        8 => conservation_and_determinism(opts),
        _ => unreachable!(),
    }
}

fn main() -> ExitCode {
    let opts = VerifyOptions {
        scale: VerifyScale::Full,
        seed: 42,
        workers: std::thread::available_parallelism().map_or(1, |n| n.get()),
        order: 24,
    };
    let mut failed = 0;
    for (i, title) in TITLES.iter().enumerate() {
        let n = i + 1;
        match criterion(n, &opts) {
            Ok(checks) => {
                let bad: Vec<_> = checks.iter().filter(|c| !c.passed).collect();
                let worst = checks
                    .iter()
                    .map(|c| format!("{} = {:.3e} ({})", c.name, c.measured, c.tolerance))
                    .collect::<Vec<_>>()
                    .join("; ");
                if bad.is_empty() {
                    println!("PASS criterion {n}: {title} | {worst}");
                } else {
                    failed += 1;
                    println!("FAIL criterion {n}: {title} | {worst}");
                    for c in bad {
                        println!("    {c}");
                    }
                }
            }
            Err(e) => {
                failed += 1;
                println!("FAIL criterion {n}: {title} | error: {e}");
            }
        }
    }
    if failed == 0 {
        println!("all 8 acceptance criteria passed");
        ExitCode::SUCCESS
    } else {
        println!("{failed} of 8 acceptance criteria failed");
        ExitCode::FAILURE
    }
}
