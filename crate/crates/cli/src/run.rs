//! The four modes. Each returns the tables to write; nothing here touches
//! the file system.

use anyhow::{Context, Result};
use hetcache_core::analytics::{self, theta_pmf};
use hetcache_core::optimizer::{alternate, baseline_mpc, baseline_udc, ccp_upper};
use hetcache_core::params::linear_to_db;
use hetcache_core::{simulator, CachingPolicy, ContentConfig, NetworkParams, OptimizerConfig, Solution};
use rayon::prelude::*;

use crate::config::{Axis, Experiment, Method, Mode};
use crate::output::{files, num, Table};

pub fn run(exp: &Experiment) -> Result<Vec<Table>> {
    match exp.mode {
        Mode::Analyze => analyze(exp),
        Mode::Simulate => simulate(exp),
        Mode::Optimize => optimize(exp),
        Mode::Sweep => sweep(exp),
    }
}

/// Sweep coordinates, or the single unswept point.
fn points(exp: &Experiment) -> Vec<Option<(Axis, f64)>> {
    match &exp.sweep {
        Some(s) => s.values.iter().map(|&v| Some((s.axis, v))).collect(),
        None => vec![None],
    }
}

fn resolve(exp: &Experiment, point: Option<(Axis, f64)>) -> Result<(NetworkParams, ContentConfig, Option<CachingPolicy>)> {
    Ok(match point {
        Some((axis, v)) => exp.at(axis, v)?,
        None => (exp.net.clone(), exp.content.clone(), exp.policy.clone()),
    })
}

const REPORT_COLUMNS: [&str; 17] = [
    "tau", "tau_db", "mu", "n_c", "psi1", "q1", "q2", "q2_lower", "q2_upper", "stp", "ase_lower", "ase_exact", "ase_upper", "ase1",
    "ase2", "theta_bar", "p_sat",
];

fn analyze(exp: &Experiment) -> Result<Vec<Table>> {
    let hash = exp.hash();
    let mut columns = Vec::new();
    if exp.sweep.is_some() {
        columns.extend(["axis", "value"]);
    }
    columns.extend(REPORT_COLUMNS);
    columns.push("epsilon");
    let mut table = Table::new("analyze", &columns);
    let rows = points(exp)
        .into_par_iter()
        .map(|point| {
            let (net, content, policy) = resolve(exp, point)?;
            let policy = policy.expect("analyze requires a policy");
            let r = analytics::report(&net, &content, &policy).with_context(|| at(point))?;
            let mut row = Vec::new();
            if let Some((axis, v)) = point {
                row.extend([axis.name().to_string(), num(v)]);
            }
            row.extend([net.tau, linear_to_db(net.tau), policy.mu].map(num));
            row.push(policy.nc().to_string());
            row.extend(
                [r.psi1, r.q1, r.q2, r.q2_lower, r.q2_upper, r.q1 + r.q2, r.ase_lower, r.ase, r.ase_upper, r.ase1, r.ase2, r.theta_bar, r.p_sat, r.epsilon]
                    .map(num),
            );
            Ok(row)
        })
        .collect::<Result<Vec<_>>>()?;
    for r in rows {
        table.push(&hash, r);
    }
    Ok(vec![table])
}

fn at(point: Option<(Axis, f64)>) -> String {
    match point {
        Some((axis, v)) => format!("at {} = {v}", axis.name()),
        None => "at the configured point".to_string(),
    }
}

fn simulate(exp: &Experiment) -> Result<Vec<Table>> {
    let hash = exp.hash();
    let policy = exp.policy.as_ref().expect("simulate requires a policy");
    let taus: Vec<f64> = points(exp)
        .into_iter()
        .map(|p| match p {
            Some((axis, v)) => exp.at(axis, v).map(|(n, _, _)| n.tau),
            None => Ok(exp.net.tau),
        })
        .collect::<Result<_, _>>()?;
    let estimates = simulator::estimate_many(&exp.net, &exp.content, policy, &exp.sim, &taus).context("simulation failed")?;

    let mut table = Table::new(
        "simulate",
        &[
            "tau", "tau_db", "mu", "q1_hat", "q1_half_width", "q2_hat", "q2_half_width", "stp_hat", "ase_hat", "ase_half_width", "q1",
            "q2", "stp", "ase_lower", "ase_exact", "ase_upper", "n_effective", "n_dropped", "n_realizations",
        ],
    );
    for e in &estimates {
        let net = exp.net.with_tau(e.tau);
        let r = analytics::report(&net, &exp.content, policy).with_context(|| format!("analysis at tau = {}", e.tau))?;
        let mut row: Vec<String> = [
            e.tau,
            linear_to_db(e.tau),
            policy.mu,
            e.q1_hat,
            e.q1_half_width,
            e.q2_hat,
            e.q2_half_width,
            e.stp(),
            e.ase_hat,
            e.ase_half_width,
            r.q1,
            r.q2,
            r.q1 + r.q2,
            r.ase_lower,
            r.ase,
            r.ase_upper,
        ]
        .map(num)
        .to_vec();
        row.extend([e.n_effective, e.n_dropped, e.n_realizations].map(|v| v.to_string()));
        table.push(&hash, row);
    }

    // the Θ histogram does not depend on the threshold
    let hist = &estimates[0].theta_hist;
    let bar = analytics::mean_theta(policy.nc(), exp.content.c2, exp.net.u2, policy.mu);
    let mut len = hist.len();
    let mut cum: f64 = (0..len as u32).map(|k| theta_pmf(k, bar)).sum();
    while cum < 1.0 - 1e-9 {
        cum += theta_pmf(len as u32, bar);
        len += 1;
    }
    let mut theta = Table::new("theta_hist", &["theta", "empirical", "analytic"]);
    for k in 0..len {
        let emp = hist.get(k).copied().unwrap_or(0.0);
        theta.push(&hash, vec![k.to_string(), num(emp), num(theta_pmf(k as u32, bar))]);
    }
    Ok(vec![table, theta])
}

fn solve(method: Method, net: &NetworkParams, content: &ContentConfig, cfg: &OptimizerConfig) -> Result<Solution> {
    let sol = match method {
        Method::Proposed => alternate(net, content, cfg),
        Method::Mpc => baseline_mpc(net, content, cfg),
        Method::Udc => baseline_udc(net, content, cfg),
        Method::Upper => ccp_upper(net, content, cfg),
    };
    sol.with_context(|| format!("method {}", method.name()))
}

const SOLUTION_COLUMNS: [&str; 7] = ["method", "variant", "objective", "ase_exact", "mu", "n_c", "nc_set"];

fn solution_fields(method: Method, s: &Solution) -> Vec<String> {
    let variant = serde_json::to_value(s.variant).ok().and_then(|v| v.as_str().map(str::to_string)).unwrap_or_default();
    vec![
        method.name().to_string(),
        variant,
        num(s.objective),
        num(s.ase_exact),
        num(s.mu),
        s.nc_set.len().to_string(),
        files(&s.nc_set),
    ]
}

fn optimize(exp: &Experiment) -> Result<Vec<Table>> {
    let hash = exp.hash();
    let sols = Method::ALL
        .par_iter()
        .map(|&m| Ok((m, solve(m, &exp.net, &exp.content, &exp.opt)?)))
        .collect::<Result<Vec<_>>>()?;
    let mut columns = SOLUTION_COLUMNS.to_vec();
    columns.push("iterations");
    let mut summary = Table::new("optimize", &columns);
    let mut placement = Table::new("optimize_policies", &["method", "file", "t"]);
    let mut traces = Table::new("optimize_traces", &["method", "iteration", "objective"]);
    for (m, s) in &sols {
        let mut row = solution_fields(*m, s);
        row.push(s.trace.len().to_string());
        summary.push(&hash, row);
        for (&f, &t) in s.nc_set.iter().zip(&s.t) {
            placement.push(&hash, vec![m.name().to_string(), (f + 1).to_string(), num(t)]);
        }
        for (k, &v) in s.trace.iter().enumerate() {
            traces.push(&hash, vec![m.name().to_string(), k.to_string(), num(v)]);
        }
    }
    Ok(vec![summary, placement, traces])
}

fn sweep(exp: &Experiment) -> Result<Vec<Table>> {
    let hash = exp.hash();
    let sweep = exp.sweep.as_ref().expect("sweep mode requires a sweep");
    let mut columns = vec!["axis", "value"];
    columns.extend(SOLUTION_COLUMNS);
    let mut table = Table::new("sweep", &columns);
    let jobs: Vec<(f64, Method)> = sweep.values.iter().flat_map(|&v| sweep.methods.iter().map(move |&m| (v, m))).collect();
    // collected in job order, so rows come out in axis order
    let rows = jobs
        .par_iter()
        .map(|&(v, m)| {
            let (net, content, _) = exp.at(sweep.axis, v)?;
            let s = solve(m, &net, &content, &exp.opt).with_context(|| at(Some((sweep.axis, v))))?;
            let mut row = vec![sweep.axis.name().to_string(), num(v)];
            row.extend(solution_fields(m, &s));
            Ok(row)
        })
        .collect::<Result<Vec<_>>>()?;
    for r in rows {
        table.push(&hash, r);
    }
    Ok(vec![table])
}
