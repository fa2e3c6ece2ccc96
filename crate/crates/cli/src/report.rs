//! Text output. Every number goes through [`fmt_num`], so documents are
//! byte-identical across runs with the same inputs.

use std::fmt::Write as _;

use pantograph::fracops::SampledFunction;
use pantograph::hypothesis::{HypothesisReport, IncrementCheck};
use pantograph::mnc::{ConditionMTable, ContractionRow, FactorCurves};
use pantograph::solver::{SolveResult, SolveStatus};

/// 12 significant digits, `%g` style: trailing zeros dropped, exponent form
/// outside [1e-4, 1e12).
pub fn fmt_num(v: f64) -> String {
    if v.is_nan() {
        return "nan".into();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if v == 0.0 {
        return "0".into();
    }
    let sci = format!("{v:.11e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-4..12).contains(&exp) {
        return format!("{}e{exp}", trim_zeros(mantissa));
    }
    let fixed = format!("{v:.*}", (11 - exp) as usize);
    trim_zeros(&fixed).to_string()
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

fn kv(out: &mut String, key: &str, value: impl AsRef<str>) {
    let _ = writeln!(out, "{key} = {}", value.as_ref());
}

fn increment_lines(out: &mut String, name: &str, c: &IncrementCheck) {
    let verdict = if c.passed {
        "empirically consistent"
    } else {
        "violated"
    };
    kv(out, &format!("increment.{name}"), verdict);
    kv(
        out,
        &format!("increment.{name}.trials"),
        c.trials.to_string(),
    );
    kv(
        out,
        &format!("increment.{name}.worst_margin"),
        fmt_num(c.worst_margin),
    );
    if let Some(w) = &c.witness {
        if !c.passed {
            kv(
                out,
                &format!("increment.{name}.witness"),
                format!(
                    "trial={} t={} x1={} y1={} x2={} y2={}",
                    w.trial,
                    fmt_num(w.t),
                    fmt_num(w.x1),
                    fmt_num(w.y1),
                    fmt_num(w.x2),
                    fmt_num(w.y2)
                ),
            );
        }
    }
    if let Some(e) = &c.error {
        kv(out, &format!("increment.{name}.error"), e);
    }
}

/// `key = value` summary of a hypothesis check.
pub fn hypothesis_document(report: &HypothesisReport, seed: u64) -> String {
    let mut out = String::new();
    kv(
        &mut out,
        "structural",
        if report.structural_ok() {
            "ok"
        } else {
            "violated"
        },
    );
    for (i, v) in report.violations.iter().enumerate() {
        kv(&mut out, &format!("violation.{}", i + 1), v.to_string());
    }
    kv(&mut out, "k1", fmt_num(report.constants.k1));
    kv(&mut out, "k2", fmt_num(report.constants.k2));
    kv(&mut out, "seed", seed.to_string());
    increment_lines(&mut out, "f", &report.increments.f);
    increment_lines(&mut out, "g", &report.increments.g);
    let c = &report.conditions;
    kv(&mut out, "gamma_alpha_plus_1", fmt_num(c.gamma_alpha_1()));
    match report.r0 {
        Some(r0) => {
            kv(&mut out, "r0", fmt_num(r0));
            kv(&mut out, "radius.product_lhs", fmt_num(c.product_lhs(r0)));
            kv(&mut out, "radius.product_rhs", fmt_num(c.product_rhs(r0)));
            kv(&mut out, "radius.g_factor_lhs", fmt_num(c.g_factor_lhs(r0)));
            kv(&mut out, "radius.g_factor_rhs", fmt_num(c.gamma_alpha_1()));
        }
        None => kv(&mut out, "r0", "none"),
    }
    kv(&mut out, "certified", report.certified().to_string());
    out
}

pub fn solve_summary(res: &SolveResult) -> String {
    let mut out = String::new();
    let status = match res.status {
        SolveStatus::Converged => "converged",
        SolveStatus::MaxIterations => "max-iterations",
    };
    kv(&mut out, "status", status);
    kv(&mut out, "grid_points", res.x.grid().n_points().to_string());
    kv(&mut out, "iterations", res.iterations.to_string());
    kv(&mut out, "final_step", fmt_num(res.final_step));
    kv(&mut out, "residual", fmt_num(res.residual));
    kv(
        &mut out,
        "discrete_residual",
        fmt_num(res.discrete_residual),
    );
    kv(&mut out, "step_ratio", fmt_num(res.step_ratio));
    kv(&mut out, "sup_norm", fmt_num(res.sup_norm));
    kv(&mut out, "sign", res.sign.label());
    out
}

/// CSV with header `t,x`, one row per node.
pub fn solution_table(x: &SampledFunction) -> String {
    let mut out = String::from("t,x\n");
    for (t, v) in x.grid().nodes().zip(x.values()) {
        let _ = writeln!(out, "{},{}", fmt_num(t), fmt_num(*v));
    }
    out
}

/// Modulus curves, the contraction table and the condition-(m) table as
/// `#`-headed CSV sections.
pub fn diagnose_document(
    members: usize,
    curves: &FactorCurves,
    contraction: &[ContractionRow],
    condition_m: &ConditionMTable,
) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# family size {members}");
    let _ = writeln!(out, "# modulus curves");
    let _ = writeln!(out, "eps,omega_X,omega_FX,omega_GX,omega_TX");
    for (i, eps) in curves.family.epsilons.iter().enumerate() {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            fmt_num(*eps),
            fmt_num(curves.family.omegas[i]),
            fmt_num(curves.nonlinear.omegas[i]),
            fmt_num(curves.integral.omegas[i]),
            fmt_num(curves.image.omegas[i]),
        );
    }
    let _ = writeln!(out, "# contraction: omega_TX against (omega_X + 1)^k - 1");
    let _ = writeln!(out, "eps,omega_X,omega_TX,bound");
    for r in contraction {
        let _ = writeln!(
            out,
            "{},{},{},{}",
            fmt_num(r.eps),
            fmt_num(r.omega_x),
            fmt_num(r.omega_tx),
            fmt_num(r.bound)
        );
    }
    let _ = writeln!(out, "# condition (m) with X = FX, Y = GX");
    let _ = writeln!(out, "eps,omega_XY,bound");
    for r in &condition_m.rows {
        let _ = writeln!(
            out,
            "{},{},{}",
            fmt_num(r.eps),
            fmt_num(r.lhs),
            fmt_num(r.rhs)
        );
    }
    let _ = writeln!(
        out,
        "# condition (m) violations: {}",
        condition_m.violations()
    );
    out
}
