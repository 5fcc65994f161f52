//! Tables and CSV emission.
//!
//! Tables round to four decimals for reading; CSV carries ten significant
//! digits, enough to re-verify an equilibrium at 1e-7 after a round trip.
//! All output is a pure function of the values, so identical inputs yield
//! byte-identical files.

use crate::design::SweepReport;
use crate::model::{Equilibrium, GameSpec, PricePosition};
use crate::oracle::SimulationStats;
use crate::solver::ResidualReport;
use std::fmt::Write as _;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("csv parse error at line {line}: {message}")]
    Csv { line: usize, message: String },
}

/// Ten significant digits, scientific.
pub fn sig10(v: f64) -> String {
    format!("{v:.9e}")
}

fn f4(v: f64) -> String {
    format!("{v:.4}")
}

pub fn equilibrium_table(game: &GameSpec, eq: &Equilibrium, report: &ResidualReport) -> String {
    let n = game.n();
    let mut s = String::new();
    let _ = writeln!(
        s,
        "k = {}   y = {}   v_l = {}   v_delta = {}",
        game.k,
        f4(eq.y),
        f4(eq.v_l),
        f4(eq.v_delta)
    );
    let _ = writeln!(
        s,
        "{:>5} {:>9} {:>9} {:>9} {:>9} {:>9} {:>7}",
        "agent", "x", "p", "mu", "v", "spread", "tier"
    );
    for i in 0..n {
        let _ = writeln!(
            s,
            "{:>5} {:>9} {:>9} {:>9} {:>9} {:>9} {:>7}",
            i + 1,
            f4(eq.x[i]),
            f4(eq.p[i]),
            f4(eq.mu[i]),
            f4(eq.v[i]),
            f4(eq.prize_spread(i)),
            eq.partition[i].to_string()
        );
    }
    let total: f64 = eq.x.iter().sum();
    let _ = writeln!(s, "total effort = {}", f4(total));
    if game.k > 1 {
        let _ = writeln!(s, "coalition matrix (row = proposer, col = included):");
        for i in 0..n {
            let row: Vec<String> = eq.psi[i].iter().map(|&v| f4(v)).collect();
            let _ = writeln!(s, "  {}", row.join(" "));
        }
    }
    let _ = writeln!(
        s,
        "verification: {} (max residual {:.3e})",
        if report.pass { "PASS" } else { "FAIL" },
        report.max_residual
    );
    for (name, r) in &report.entries {
        let _ = writeln!(s, "  {name:<22} {r:.3e}");
    }
    s
}

/// Wide CSV, one row per agent, scalar columns repeated. Documented in the
/// repository readme.
pub fn equilibrium_csv(game: &GameSpec, eq: &Equilibrium) -> String {
    let n = game.n();
    let mut s = String::new();
    let psi_cols: Vec<String> = (1..=n).map(|j| format!("psi_{j}")).collect();
    let _ = writeln!(s, "agent,x,p,mu,v,partition,v_l,v_delta,y,k,{}", psi_cols.join(","));
    for i in 0..n {
        let psi_row: Vec<String> = eq.psi[i].iter().map(|&v| sig10(v)).collect();
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{},{},{},{}",
            i + 1,
            sig10(eq.x[i]),
            sig10(eq.p[i]),
            sig10(eq.mu[i]),
            sig10(eq.v[i]),
            eq.partition[i],
            sig10(eq.v_l),
            sig10(eq.v_delta),
            sig10(eq.y),
            game.k,
            psi_row.join(",")
        );
    }
    s
}

/// Reads an equilibrium back from [`equilibrium_csv`] output.
pub fn parse_equilibrium_csv(text: &str) -> Result<(usize, Equilibrium), ReportError> {
    let mut lines = text.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or(ReportError::Csv { line: 1, message: "empty file".into() })?;
    let cols: Vec<&str> = header.split(',').collect();
    if cols.len() < 11 || cols[0] != "agent" {
        return Err(ReportError::Csv { line: 1, message: "unrecognized header".into() });
    }
    let n_psi = cols.len() - 10;
    let mut x = Vec::new();
    let mut p = Vec::new();
    let mut mu = Vec::new();
    let mut v = Vec::new();
    let mut partition = Vec::new();
    let mut psi = Vec::new();
    let mut v_l = 0.0;
    let mut v_delta = 0.0;
    let mut y = 0.0;
    let mut k = 0usize;
    for (idx, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let lineno = idx + 1;
        let err = |message: String| ReportError::Csv { line: lineno, message };
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != cols.len() {
            return Err(err(format!("expected {} fields, found {}", cols.len(), f.len())));
        }
        let num = |s: &str| -> Result<f64, ReportError> {
            s.parse::<f64>().map_err(|e| ReportError::Csv {
                line: lineno,
                message: format!("bad number {s:?}: {e}"),
            })
        };
        x.push(num(f[1])?);
        p.push(num(f[2])?);
        mu.push(num(f[3])?);
        v.push(num(f[4])?);
        partition.push(
            f[5].parse::<PricePosition>().map_err(|message| ReportError::Csv {
                line: lineno,
                message,
            })?,
        );
        v_l = num(f[6])?;
        v_delta = num(f[7])?;
        y = num(f[8])?;
        k = f[9]
            .parse()
            .map_err(|e| ReportError::Csv { line: lineno, message: format!("bad k: {e}") })?;
        let mut row = Vec::with_capacity(n_psi);
        for fld in &f[10..] {
            row.push(num(fld)?);
        }
        psi.push(row);
    }
    let n = x.len();
    if n == 0 || psi.iter().any(|r| r.len() != n) {
        return Err(ReportError::Csv { line: 1, message: "inconsistent agent count".into() });
    }
    Ok((
        k,
        Equilibrium { x, p, mu, psi, v, y, v_delta, v_l, partition, residuals: Vec::new() },
    ))
}

pub fn simulation_csv(stats: &SimulationStats) -> String {
    let mut s = String::from("agent,p_hat,p_se,mu_hat,mu_se,v_hat,v_se\n");
    for i in 0..stats.p_hat.len() {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{}",
            i + 1,
            sig10(stats.p_hat[i]),
            sig10(stats.p_se[i]),
            sig10(stats.mu_hat[i]),
            sig10(stats.mu_se[i]),
            sig10(stats.v_hat[i]),
            sig10(stats.v_se[i])
        );
    }
    s
}

pub fn simulation_table(stats: &SimulationStats) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "rounds = {}", stats.rounds);
    let _ = writeln!(s, "agreement periods: {:?}", stats.agreement_histogram);
    let _ = writeln!(
        s,
        "{:>5} {:>10} {:>10} {:>10} {:>10} {:>10} {:>10}",
        "agent", "p_hat", "p_se", "mu_hat", "mu_se", "v_hat", "v_se"
    );
    for i in 0..stats.p_hat.len() {
        let _ = writeln!(
            s,
            "{:>5} {:>10} {:>10} {:>10} {:>10} {:>10} {:>10}",
            i + 1,
            f4(stats.p_hat[i]),
            format!("{:.2e}", stats.p_se[i]),
            f4(stats.mu_hat[i]),
            format!("{:.2e}", stats.mu_se[i]),
            f4(stats.v_hat[i]),
            format!("{:.2e}", stats.v_se[i])
        );
    }
    s
}

pub fn sweep_table(report: &SweepReport) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "{:>3} {:>12} {:>7} {}", "k", "objective", "search", "mechanism");
    for row in &report.rows {
        if let Some(err) = &row.error {
            let _ = writeln!(s, "{:>3} {:>12} {:>7} failed: {err}", row.k, "-", "-");
            continue;
        }
        let alpha: Vec<String> = row.alpha.iter().map(|&a| f4(a)).collect();
        let beta: Vec<String> = row.beta.iter().map(|&b| f4(b)).collect();
        let _ = writeln!(
            s,
            "{:>3} {:>12} {:>7} alpha=[{}] beta=[{}]",
            row.k,
            f4(row.lambda),
            if row.local_only { "local" } else { "exact" },
            alpha.join(", "),
            beta.join(", ")
        );
    }
    if let Some(best) = report.best_k {
        let _ = writeln!(s, "best rule: k = {best}");
    }
    if let (Some(gap), Some(dom)) = (report.dominance_gap, report.dictator_dominates) {
        let _ = writeln!(
            s,
            "dictator-rule dominance: {} (gap {:.2e})",
            if dom { "holds" } else { "VIOLATED" },
            gap
        );
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::builtin::biased_game;
    use crate::solver::{solve_game, verify_equilibrium, SolverConfig};

    #[test]
    fn csv_round_trip_preserves_verification() {
        let game = biased_game(0.01);
        let eq = solve_game(&game, &SolverConfig::default()).unwrap();
        let csv = equilibrium_csv(&game, &eq);
        let (k, back) = parse_equilibrium_csv(&csv).unwrap();
        assert_eq!(k, 2);
        let report = verify_equilibrium(&game, &back, 1e-7);
        assert!(report.pass, "round-tripped residuals {:?}", report.entries);
    }

    #[test]
    fn csv_is_deterministic() {
        let game = biased_game(0.01);
        let eq = solve_game(&game, &SolverConfig::default()).unwrap();
        assert_eq!(equilibrium_csv(&game, &eq), equilibrium_csv(&game, &eq));
    }

    #[test]
    fn sig10_has_ten_significant_digits() {
        assert_eq!(sig10(1.0 / 3.0), "3.333333333e-1");
    }

    #[test]
    fn csv_rejects_garbage() {
        assert!(parse_equilibrium_csv("not,a,csv\n1,2").is_err());
        assert!(parse_equilibrium_csv("").is_err());
    }
}
