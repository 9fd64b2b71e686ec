use serde::de::DeserializeOwned;
use serde_json::{json, Value};

use super::spec::*;
use super::table::{Cell, Table};
use crate::bandit::{mean_regret_by_checkpoint, run_regret_experiment, BanditInstance, EpisodeOptions, RegretExperiment};
use crate::bounds::{
    cor1_bound, cor2_bound, cor2_constants, prior_bound_cgmms, sanov_bound, t_chi_root, theorem_main_bound,
    BoundConfig, CorollaryInputs,
};
use crate::error::{Error, Result};
use crate::expfam::{FamilyKind, ParamRegion};
use crate::kinf::kinf;
use crate::mcverify::{
    compare_to_envelope, estimate_crossing_with_threads, exact_crossing_bernoulli, spec_bound_config, CrossingSpec,
    DP_MAX_T,
};

pub(crate) const DEFAULT_REPLICATES: u64 = 1000;

/// Everything a command produces, written only once the command succeeded.
pub struct Outcome {
    pub table: Table,
    pub derived: Value,
    /// Set by `verify envelope` when some row fails.
    pub failed: bool,
}

pub(crate) struct RunContext {
    pub seed: u64,
    pub replicates: Option<u64>,
    pub threads: Option<usize>,
    pub hash: String,
}

fn parse<T: DeserializeOwned>(config: &Value, what: Command) -> Result<T> {
    serde_json::from_value(config.clone()).map_err(|e| Error::Config(format!("invalid {what} config: {e}")))
}

fn to_json<T: serde::Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("derived values serialize")
}

fn check_t(ts: &[u64]) -> Result<()> {
    if ts.is_empty() {
        return Err(Error::Config("the list of horizons t is empty".into()));
    }
    Ok(())
}

pub(crate) fn execute(command: Command, config: &Value, ctx: &RunContext) -> Result<Outcome> {
    match command {
        Command::Kinf => kinf_cmd(parse(config, command)?),
        Command::BoundCor1 | Command::BoundCor2 => corollary_cmd(command, parse(config, command)?),
        Command::BoundTheorem => theorem_cmd(parse(config, command)?),
        Command::BoundPrior => prior_cmd(parse(config, command)?),
        Command::BoundSanov => sanov_cmd(parse(config, command)?),
        Command::SimulateRegret => regret_cmd(parse(config, command)?, ctx),
        Command::SimulateCrossing | Command::VerifyEnvelope => crossing_cmd(command, parse(config, command)?, ctx),
    }
}

fn kinf_cmd(cfg: KinfConfig) -> Result<Outcome> {
    let theta = cfg.family.theta_from_interpretable(&cfg.params)?;
    let k = cfg.family.dim();
    let mut cols = vec!["mu".to_string(), "value".into(), "lambda".into(), "active".into()];
    cols.extend((0..k).map(|i| format!("minimizer_{i}")));
    let mut table = Table::new(cols);
    for &mu in &cfg.mu {
        let r = kinf(&cfg.family, &theta, mu)?;
        let mut row = vec![Cell::from(mu), r.value.into(), r.lambda.into(), r.active.into()];
        row.extend(r.minimizer.theta.iter().map(|x| Cell::from(*x)));
        table.push(row);
    }
    let derived = json!({ "theta": theta, "mean": cfg.family.mean(&theta)? });
    Ok(Outcome { table, derived, failed: false })
}

fn resolve_setup(setup: &BoundSetup) -> Result<(BoundConfig, Value)> {
    match setup {
        BoundSetup::Family(s) => {
            let theta = s.family.theta_from_interpretable(&s.theta_star)?;
            let region = ParamRegion::new(&s.family, theta, s.region.base.clone(), s.region.rho)?;
            let cfg = BoundConfig::for_family(&s.family, &region, s.params)?;
            let extra = json!({ "theta_star": region.center, "region": region });
            Ok((cfg, extra))
        }
        BoundSetup::Constants(c) => {
            let cfg = BoundConfig::from_constants(c.k, c.rho, c.v_rho, c.big_v_rho, c.rho_eps, c.cover_count, c.params)?;
            Ok((cfg, json!({})))
        }
    }
}

/// Constants of both corollaries; the f(t/n) ones only where ξ allows them.
fn corollary_derived(inputs: &CorollaryInputs) -> Value {
    let mut v = json!({ "corollary_inputs": inputs });
    if let Ok(cs) = cor2_constants(inputs) {
        v["cor2_constants"] = to_json(&cs);
        v["t_chi_root"] = json!(t_chi_root(inputs.chi_eps));
    }
    v
}

fn bound_derived(cfg: &BoundConfig, extra: Value) -> Value {
    let mut v = corollary_derived(&cfg.corollary_inputs());
    v["bound_config"] = to_json(cfg);
    v["C_p_eta_K"] = json!(cfg.cover_count);
    if let Value::Object(m) = extra {
        for (k, x) in m {
            v[k] = x;
        }
    }
    v
}

fn corollary_cmd(command: Command, cfg: CorollaryConfig) -> Result<Outcome> {
    check_t(&cfg.t)?;
    let (inputs, derived) = match (&cfg.setup, &cfg.inputs) {
        (Some(s), None) => {
            let (bc, extra) = resolve_setup(s)?;
            (bc.corollary_inputs(), bound_derived(&bc, extra))
        }
        (None, Some(i)) => (*i, corollary_derived(i)),
        _ => return Err(Error::Config("give exactly one of `setup` and `inputs`".into())),
    };
    let table = if command == Command::BoundCor1 {
        let mut table = Table::new(["t", "value"]);
        for &t in &cfg.t {
            table.push(vec![t.into(), cor1_bound(t, &inputs)?.into()]);
        }
        table
    } else {
        let mut table = Table::new(["t", "value", "window"]);
        for &t in &cfg.t {
            let v = cor2_bound(t, &inputs)?;
            table.push(vec![t.into(), v.value.into(), v.window.as_str().into()]);
        }
        table
    };
    Ok(Outcome { table, derived, failed: false })
}

fn theorem_cmd(cfg: TheoremConfig) -> Result<Outcome> {
    check_t(&cfg.t)?;
    let (bc, extra) = resolve_setup(&cfg.setup)?;
    let mut table = Table::new(["t", "value"]);
    for &t in &cfg.t {
        table.push(vec![t.into(), theorem_main_bound(t, &bc, cfg.variant)?.into()]);
    }
    Ok(Outcome { table, derived: bound_derived(&bc, extra), failed: false })
}

fn prior_cmd(cfg: PriorConfig) -> Result<Outcome> {
    check_t(&cfg.t)?;
    let mut table = Table::new(["t", "value"]);
    for &t in &cfg.t {
        table.push(vec![t.into(), prior_bound_cgmms(t, cfg.xi)?.into()]);
    }
    Ok(Outcome { table, derived: json!({}), failed: false })
}

fn sanov_cmd(cfg: SanovConfig) -> Result<Outcome> {
    check_t(&cfg.t)?;
    let theta = cfg.family.theta_from_interpretable(&cfg.params)?;
    let k = kinf(&cfg.family, &theta, cfg.mu)?;
    let mut table = Table::new(["t", "value"]);
    for &t in &cfg.t {
        table.push(vec![t.into(), sanov_bound(&cfg.family, &theta, cfg.mu, t)?.into()]);
    }
    Ok(Outcome { table, derived: json!({ "theta": theta, "kinf": k.value }), failed: false })
}

fn regret_cmd(cfg: RegretConfig, ctx: &RunContext) -> Result<Outcome> {
    let arms = cfg
        .arms
        .iter()
        .map(|p| Ok((cfg.family.clone(), cfg.family.theta_from_interpretable(p)?)))
        .collect::<Result<Vec<_>>>()?;
    let instance = BanditInstance::new(arms)?;
    let replicates = ctx.replicates.unwrap_or(DEFAULT_REPLICATES);
    if replicates == 0 {
        return Err(Error::Config("replicates must be positive".into()));
    }
    let exp = RegretExperiment { strategy: cfg.strategy, xi: cfg.xi, horizon: cfg.horizon, replicates, seed: ctx.seed };
    let options = EpisodeOptions { epsilon: cfg.epsilon };
    let rows = run_regret_experiment(&instance, &exp, options, ctx.threads)?;
    let n_arms = instance.arms.len();
    let mut cols = vec!["replicate".to_string(), "t".into(), "regret".into(), "crossings".into()];
    cols.extend((0..n_arms).map(|a| format!("pulls_{a}")));
    let mut table = Table::new(cols);
    for rep in &rows {
        for r in rep {
            let mut row = vec![Cell::from(r.replicate), r.t.into(), r.regret.into(), r.crossings.into()];
            row.extend(r.pulls.iter().map(|p| Cell::from(*p)));
            table.push(row);
        }
    }
    let mean: Vec<Value> =
        mean_regret_by_checkpoint(&rows).into_iter().map(|(t, m)| json!({ "t": t, "mean_regret": m })).collect();
    let derived = json!({
        "means": instance.means,
        "mu_star": instance.mu_star,
        "gaps": instance.gaps,
        "epsilon": cfg.epsilon.unwrap_or_else(|| instance.default_epsilon()),
        "lai_robbins_constant": instance.lai_robbins_constant()?,
        "lai_robbins_regret": instance.lai_robbins_constant()? * (cfg.horizon as f64).ln(),
        "replicates": replicates,
        "mean_regret": mean,
    });
    Ok(Outcome { table, derived, failed: false })
}

fn crossing_cmd(command: Command, cfg: CrossingConfig, ctx: &RunContext) -> Result<Outcome> {
    check_t(&cfg.t)?;
    if cfg.xi.is_empty() {
        return Err(Error::Config("the list of xi values is empty".into()));
    }
    let theta = cfg.family.theta_from_interpretable(&cfg.theta_star)?;
    let region = ParamRegion::new(&cfg.family, theta.clone(), cfg.region.base.clone(), cfg.region.rho)?;
    let n_runs = ctx.replicates.unwrap_or(DEFAULT_REPLICATES);
    let exact_available = cfg.exact && cfg.family.kind() == FamilyKind::Bernoulli;
    let mut table =
        Table::new(["spec_hash", "t", "xi", "variant", "p_hat", "ci_low", "ci_high", "exact", "envelope", "pass"]);
    let mut failed = false;
    let mut constants = Vec::new();
    for &xi in &cfg.xi {
        for &t in &cfg.t {
            let spec = CrossingSpec {
                model: cfg.family.clone(),
                theta_star: theta.clone(),
                epsilon: cfg.epsilon,
                region: region.clone(),
                t,
                xi,
                variant: cfg.variant,
                restrict_to_region: cfg.restrict_to_region,
            };
            let mut est = estimate_crossing_with_threads(&spec, n_runs, ctx.seed, ctx.threads)?;
            if exact_available && t <= DP_MAX_T {
                est.exact = Some(exact_crossing_bernoulli(&spec)?);
            }
            let report = compare_to_envelope(&est, est.envelope);
            failed |= !report.pass;
            let pass = if command == Command::VerifyEnvelope { Cell::from(report.pass) } else { Cell::Empty };
            table.push(vec![
                ctx.hash.as_str().into(),
                t.into(),
                xi.into(),
                variant_str(cfg.variant).into(),
                est.p_hat.into(),
                est.ci_low.into(),
                est.ci_high.into(),
                est.exact.into(),
                est.envelope.into(),
                pass,
            ]);
        }
        let first = CrossingSpec {
            model: cfg.family.clone(),
            theta_star: theta.clone(),
            epsilon: cfg.epsilon,
            region: region.clone(),
            t: cfg.t[0],
            xi,
            variant: cfg.variant,
            restrict_to_region: cfg.restrict_to_region,
        };
        let c = match spec_bound_config(&first) {
            Ok(bc) => bound_derived(&bc, json!({ "xi": xi })),
            Err(e) => json!({ "xi": xi, "unavailable": e.to_string() }),
        };
        constants.push(c);
    }
    let derived = json!({
        "theta_star": theta,
        "mean": cfg.family.mean(&theta)?,
        "region": region,
        "n_runs": n_runs,
        "constants_by_xi": constants,
    });
    Ok(Outcome { table, derived, failed: failed && command == Command::VerifyEnvelope })
}

fn variant_str(v: crate::bounds::ThresholdVariant) -> &'static str {
    match v {
        crate::bounds::ThresholdVariant::FOfT => "f_of_t",
        crate::bounds::ThresholdVariant::FOfTOverN => "f_of_t_over_n",
    }
}
