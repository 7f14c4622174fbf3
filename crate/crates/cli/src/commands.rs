//! Subcommand bodies. Each returns CSV lines without the header comment.

use std::fmt::Write as _;

use chernoff_qkd::dibound::di_guessing_bound;
use chernoff_qkd::divergence::helstrom_guess;
use chernoff_qkd::protocol::{expected_accept_rate, simulate_blocks, Variant};
use chernoff_qkd::scenarios::{find_threshold, honest_behavior, isotropic_attack, BoundSource, DEFAULT_TOL_Q, PRESCAN_POINTS};
use chernoff_qkd::security::{bob_entropy, delta_k, evaluate_conditions, key_entropy, DEFAULT_TOL_COND};
use chernoff_qkd::{AttackModel, DensityMatrix, Error, Measures};
use rayon::prelude::*;

use crate::config::Params;

/// Slack used when checking the measure inequalities on CLI output.
const LATTICE_SLACK: f64 = 1e-8;

pub fn num(x: f64) -> String {
    format!("{x:.12e}")
}

/// Failure with its process exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
    /// Output produced before the failure, still written out.
    pub partial: Option<String>,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::NoThreshold(_) => 4,
            _ => 2,
        };
        Failure {
            code,
            message: e.to_string(),
            partial: None,
        }
    }
}

pub type Outcome = std::result::Result<String, Failure>;

pub fn measures(rho: &DensityMatrix, sigma: &DensityMatrix) -> Outcome {
    let m = Measures::compute(rho, sigma)?;
    let mut out = String::from("d,F,Q,s_star\n");
    let _ = writeln!(
        out,
        "{},{},{},{}",
        num(m.trace_distance),
        num(m.fidelity),
        num(m.nqcd.value),
        num(m.nqcd.s_star)
    );
    if !m.lattice_holds(LATTICE_SLACK) {
        return Err(Failure {
            code: 3,
            message: "measures violate F^2 <= Q <= F or Q >= 1 - d".into(),
            partial: Some(out),
        });
    }
    Ok(out)
}

pub fn analyze(a: &AttackModel, k_max: usize) -> Outcome {
    let verdict = evaluate_conditions(a, DEFAULT_TOL_COND)?;
    let eps = a.eps();
    let mut out = String::from("k,delta_k,h_delta_k,H_C_ETM,margin,thm1_sufficient,thm2_insecure,verdict\n");
    let mut first_positive = None;
    for k in 1..=k_max {
        let h_key = match key_entropy(a, k) {
            Ok(h) => h,
            Err(Error::Capacity { what, needed, cap }) => {
                let _ = writeln!(out, "# warning: k={k} needs dimension {needed} for {what} (cap {cap}); table truncated");
                break;
            }
            Err(e) => return Err(e.into()),
        };
        let d = delta_k(eps, k)?;
        let hb = bob_entropy(eps, k)?;
        let margin = h_key - hb;
        if margin > 0.0 && first_positive.is_none() {
            first_positive = Some(k);
        }
        let _ = writeln!(
            out,
            "{k},{},{},{},{},{},{},{}",
            num(d),
            num(hb),
            num(h_key),
            num(margin),
            verdict.thm1_sufficient,
            verdict.thm2_insecure,
            verdict.label()
        );
    }
    let _ = writeln!(
        out,
        "verdict,,,,,{},{},{}",
        verdict.thm1_sufficient,
        verdict.thm2_insecure,
        verdict.label()
    );
    match first_positive {
        Some(k) => {
            let _ = writeln!(out, "# smallest k with positive margin: {k} (empirical, not certified)");
        }
        None => out.push_str("# no computed k has positive margin\n"),
    }
    out.push_str("# ");
    out.push_str(&verdict.report().replace('\n', "\n# "));
    out.push('\n');
    Ok(out)
}

pub fn conditions(a: &AttackModel) -> Outcome {
    let v = evaluate_conditions(a, DEFAULT_TOL_COND)?;
    Ok(format!("{}\n{}\n", chernoff_qkd::SecurityVerdict::CSV_HEADER, v.csv_row()))
}

pub fn simulate(eps: f64, k: usize, blocks: u64, variant: Variant, seed: u64) -> Outcome {
    let s = simulate_blocks(eps, k, blocks, variant, seed)?;
    let expected = expected_accept_rate(eps, k, variant);
    let d = delta_k(eps, k)?;
    let name = match variant {
        Variant::Standard => "standard",
        Variant::Modified => "modified",
    };
    let mut out = String::from(
        "eps,k,variant,blocks,accepted,accept_rate,expected_accept_rate,accept_se,mismatch_rate,delta_k,mismatch_se\n",
    );
    let _ = writeln!(
        out,
        "{},{k},{name},{},{},{},{},{},{},{},{}",
        num(eps),
        s.blocks_run,
        s.blocks_accepted,
        num(s.accept_rate),
        num(expected),
        num(s.accept_se(expected)),
        num(s.mismatch_rate_given_accept),
        num(d),
        num(s.mismatch_se(d))
    );
    Ok(out)
}

pub fn threshold(p: &Params) -> Outcome {
    let id = p.scenario()?;
    let condition = p.condition()?;
    let exact = p.exact_bound()?;
    let source = if exact {
        BoundSource::ExactAttack
    } else {
        BoundSource::DiSdp {
            level: p.level_or_default(),
        }
    };
    let level = if exact { String::new() } else { p.level_or_default().to_string() };
    let bound = if exact { "exact" } else { "sdp" };
    let t = find_threshold(condition, id, source, p.tol_q.unwrap_or(DEFAULT_TOL_Q))?;
    Ok(format!(
        "case,condition,bound,level,q_star,lo,hi,evaluations\n{},{condition},{bound},{level},{},{},{},{}\n",
        id.number(),
        num(t.q_star),
        num(t.lo),
        num(t.hi),
        t.evaluations
    ))
}

/// DI guessing bound against the isotropic attack's Helstrom value, at `--q` or on the pre-scan grid.
pub fn dibound(p: &Params) -> Outcome {
    let id = p.scenario()?;
    let level = p.level_or_default();
    let grid: Vec<f64> = match p.q {
        Some(q) => vec![q],
        None => (0..PRESCAN_POINTS).map(|i| 0.5 * i as f64 / (PRESCAN_POINTS - 1) as f64).collect(),
    };
    let rows: Vec<std::result::Result<String, Error>> = grid
        .par_iter()
        .map(|&q| {
            let b = honest_behavior(id, q)?;
            let (pg, d) = di_guessing_bound(&b, level)?;
            let a = isotropic_attack(id, q)?;
            let exact = helstrom_guess(0.5, a.state(0, 0), 0.5, a.state(1, 1))?;
            Ok(format!(
                "{},{level},{},{},{},{},{}",
                id.number(),
                num(q),
                num(b.qber()),
                num(pg),
                num(d),
                num(exact)
            ))
        })
        .collect();
    let mut out = String::from("case,level,q,eps,P_g,d_upper,isotropic_P_g\n");
    for r in rows {
        out.push_str(&r?);
        out.push('\n');
    }
    Ok(out)
}
