use serde_json::{json, Value};

use msmc::analysis::{
    asymptotic_loglik_check, contour_grid, coupling_tail, curvature_check, drift_verify, escape_experiment,
    growth_constants_series, hitting_scaling, jump_variance_floor, local_tv_profile, riemann_gauss,
    riemann_gauss_log10_error, LocalTvProfile, LogLikForm, PairSelection,
};
use msmc::bounds::{
    bound_global, bound_metastable_quality, bound_no_mixing, bound_with_mixing, counterexample_instance,
    default_metastable_kernels, first_term_in_next_measure, BoundReport,
};
use msmc::fk::{asymptotic_variance_exact, BridgingDocument, BridgingSequence};
use msmc::instances::random_metastable_chain;
use msmc::potts::{
    BarycentricGeometry, PottsBridging, PottsParams, StepSchedule, BETA_C, CENTRAL_MODE, DEFAULT_RHO,
};
use msmc::rng::stream;
use msmc::smc::{
    replicate_asymptotic_variance, run_smc, FiniteModel, ReplicateVariance, ResamplingPolicy, SeedLineage,
};

use crate::config::Params;
use crate::output::{Outcome, Table};
use crate::{Command, Failure};

type Res = Result<Outcome, Failure>;

fn to_json<T: serde::Serialize>(v: &T) -> Value {
    serde_json::to_value(v).unwrap_or(Value::Null)
}

pub fn dispatch(cmd: Command, p: &Params) -> Res {
    match cmd {
        Command::Counterexample => counterexample(),
        Command::VarianceExact => variance_exact(p),
        Command::SmcRun => smc_run(p),
        Command::ReplicateVariance => replicate_variance(p),
        Command::Bounds => bounds(p),
        Command::MetastableQuality => metastable_quality(p),
        Command::GrowthConstants => growth(p),
        Command::DriftVerify => drift(p),
        Command::JumpVariance => jump_variance(p),
        Command::Curvature => curvature(p),
        Command::CouplingTail => coupling(p),
        Command::Hitting => hitting(p),
        Command::Escape => escape(p),
        Command::RiemannGauss => riemann(p),
        Command::LoglikCheck => loglik(p),
        Command::LocalTv => local_tv(p),
        Command::Contour => contour(p),
    }
}

fn load_sequence(p: &Params) -> Result<(BridgingSequence, BridgingDocument), Failure> {
    let path = p
        .opt_string("input")
        .ok_or_else(|| Failure::Input("--input <sequence.json> is required".into()))?;
    let text = std::fs::read_to_string(&path).map_err(|e| Failure::Input(format!("{path}: {e}")))?;
    let doc = BridgingDocument::from_json(&text)?;
    Ok((BridgingSequence::from_document(&doc)?, doc))
}

fn phi_of(doc: &BridgingDocument) -> Result<Vec<f64>, Failure> {
    doc.phi
        .clone()
        .ok_or_else(|| Failure::Input("the input has no \"phi\" array".into()))
}

fn policy(p: &Params) -> Result<ResamplingPolicy, Failure> {
    let policy = match p.string("policy", "every").as_str() {
        "every" => ResamplingPolicy::EveryStage,
        "ess" => ResamplingPolicy::EssThreshold {
            threshold: p.f64("threshold", 0.5)?,
        },
        other => return Err(Failure::Input(format!("policy must be every or ess, got '{other}'"))),
    };
    policy.validate()?;
    Ok(policy)
}

fn beta(p: &Params) -> Result<f64, Failure> {
    p.f64("beta_tilde", BETA_C)
}

fn potts_model(p: &Params) -> Result<PottsBridging, Failure> {
    let m = p.usize("M", 40)?;
    let params = PottsParams::new(m, beta(p)?)?;
    let schedule = StepSchedule::PolyLog { c1: p.f64("c1", 1.0)? };
    Ok(match p.string("kind", "interpolation").as_str() {
        "interpolation" => PottsBridging::interpolation(params, &schedule)?,
        "tempering" => PottsBridging::tempering(params, p.usize("stages", m)?, &schedule)?,
        other => return Err(Failure::Input(format!("kind must be interpolation or tempering, got '{other}'"))),
    })
}

/// Indicator of one mode of the full configuration (modes decided at full
/// length, so `j0` does not apply).
fn potts_phi(p: &Params) -> Result<(BarycentricGeometry, usize), Failure> {
    let geometry = BarycentricGeometry::new(p.f64("rho", 0.02)?, 0)?;
    let mode = p.usize("phi_mode", CENTRAL_MODE)?;
    if mode > 3 {
        return Err(Failure::Input(format!("phi_mode must be in 0..=3, got {mode}")));
    }
    Ok((geometry, mode))
}

fn counterexample() -> Res {
    let c = counterexample_instance()?;
    let mut table = Table::new(&[
        "case",
        "asymptotic_variance",
        "next_measure_reconstruction",
        "global_bound",
        "no_mixing_bound",
        "with_mixing_bound",
    ]);
    let mut report = serde_json::Map::new();
    for (name, seq) in [("mixing", &c.mixing), ("no-mixing", &c.no_mixing)] {
        let v = asymptotic_variance_exact(seq, &c.phi)?;
        let shifted = first_term_in_next_measure(seq, &c.phi)?;
        let global = bound_global(seq, &c.phi)?;
        let nomix = bound_no_mixing(seq, &c.partition, &c.phi).ok();
        let meta = default_metastable_kernels(seq, false)?;
        let with = bound_with_mixing(seq, &meta, &c.phi)?;
        table.push(vec![
            name.into(),
            v.total.into(),
            shifted.into(),
            global.bound_value.into(),
            nomix.as_ref().map_or(f64::INFINITY, |b| b.bound_value).into(),
            with.bound_value.into(),
        ]);
        report.insert(
            name.into(),
            json!({
                "variance": v,
                "next_measure_reconstruction": shifted,
                "global": global,
                "no_mixing": nomix,
                "with_mixing": with,
            }),
        );
    }
    report.insert(
        "repair".into(),
        json!({
            "row_factors_mixing": c.row_factors_mixing,
            "row_factors_no_mixing": c.row_factors_no_mixing,
            "reversibility_defect_mixing": c.reversibility_defect_mixing,
            "reversibility_defect_no_mixing": c.reversibility_defect_no_mixing,
            "adjustment_mixing": c.adjustment_mixing,
            "adjustment_no_mixing": c.adjustment_no_mixing,
        }),
    );
    Ok(Outcome {
        table,
        report: Value::Object(report),
        notes: vec![
            "inf marks a bound whose contraction condition fails, or (no-mixing bound, mixing case) a kernel that leaves the blocks"
                .into(),
            "next_measure_reconstruction measures each term under the following distribution; it is not a variance"
                .into(),
        ],
        ..Default::default()
    })
}

fn variance_exact(p: &Params) -> Res {
    let (seq, doc) = load_sequence(p)?;
    let v = asymptotic_variance_exact(&seq, &phi_of(&doc)?)?;
    let mut table = Table::new(&["k", "v_k"]);
    for (k, t) in v.terms.iter().enumerate() {
        table.push(vec![k.into(), (*t).into()]);
    }
    Ok(Outcome {
        table,
        report: to_json(&v),
        ..Default::default()
    })
}

fn smc_run(p: &Params) -> Res {
    let particles = p.usize("N", 10_000)?;
    let lineage = SeedLineage {
        seed: p.u64("seed", 0)?,
        replicate: 0,
    };
    let policy = policy(p)?;
    let (estimate, ess, resampled, exact) = if p.opt_string("input").is_some() {
        let (seq, doc) = load_sequence(p)?;
        let phi = phi_of(&doc)?;
        let out = run_smc(&FiniteModel::new(&seq), particles, lineage, policy, &|x: &usize| phi[*x])?;
        let exact = seq.target().expectation(&phi);
        (out.estimate, out.ess_trace, out.resampled, exact)
    } else {
        let model = potts_model(p)?;
        let (geometry, mode) = potts_phi(p)?;
        let phi = |s: &msmc::potts::SpinConfiguration| (geometry.mode(&s.magnetisation()) == mode) as u8 as f64;
        let out = run_smc(&model, particles, lineage, policy, &phi)?;
        let exact = model.target_pmf().mode_masses(&geometry)[mode];
        (out.estimate, out.ess_trace, out.resampled, exact)
    };
    let mut table = Table::new(&["stage", "ess", "resampled"]);
    for (k, (e, r)) in ess.iter().zip(&resampled).enumerate() {
        table.push(vec![k.into(), (*e).into(), (*r).into()]);
    }
    Ok(Outcome {
        table,
        report: json!({
            "estimate": estimate,
            "exact": exact,
            "ess_trace": ess,
            "resampled": resampled,
            "experimental": policy.is_experimental(),
        }),
        notes: vec![format!("estimate {estimate:.6} (exact {exact:.6})")],
        ..Default::default()
    })
}

fn replicate_variance(p: &Params) -> Res {
    let particles = p.usize("N", 10_000)?;
    let replicates = p.usize("replicates", 100)?;
    let seed = p.u64("seed", 0)?;
    let level = p.f64("level", 0.99)?;
    let policy = policy(p)?;
    let (rv, exact): (ReplicateVariance, Option<f64>) = if p.opt_string("input").is_some() {
        let (seq, doc) = load_sequence(p)?;
        let phi = phi_of(&doc)?;
        let rv = replicate_asymptotic_variance(
            &FiniteModel::new(&seq),
            &|x: &usize| phi[*x],
            particles,
            replicates,
            seed,
            policy,
            level,
        )?;
        (rv, Some(asymptotic_variance_exact(&seq, &phi)?.total))
    } else {
        let model = potts_model(p)?;
        let (geometry, mode) = potts_phi(p)?;
        let phi = |s: &msmc::potts::SpinConfiguration| (geometry.mode(&s.magnetisation()) == mode) as u8 as f64;
        (
            replicate_asymptotic_variance(&model, &phi, particles, replicates, seed, policy, level)?,
            None,
        )
    };
    let (lo, hi) = rv.ci.unwrap_or((f64::NEG_INFINITY, f64::INFINITY));
    let mut header = vec!["mean", "scaled_variance", "ci_low", "ci_high", "deaths"];
    let mut row = vec![
        rv.mean.into(),
        rv.scaled_variance.into(),
        lo.into(),
        hi.into(),
        rv.deaths.into(),
    ];
    if let Some(v) = exact {
        header.push("exact_variance");
        row.push(v.into());
    }
    let mut table = Table::new(&header);
    table.push(row);
    let mut notes = Vec::new();
    if let Some(v) = exact {
        notes.push(format!(
            "exact {v:.6}, empirical {:.6}, interval [{lo:.6}, {hi:.6}]{}",
            rv.scaled_variance,
            if v >= lo && v <= hi { "" } else { " (not bracketed)" }
        ));
    }
    if policy.is_experimental() {
        notes.push("ESS-threshold resampling is experimental; the exact variance does not describe it".into());
    }
    Ok(Outcome {
        table,
        report: json!({
            "replicate_variance": rv.scaled_variance,
            "ci": rv.ci.map(|(a, b)| vec![a, b]),
            "deaths": rv.deaths,
            "mean": rv.mean,
            "exact_variance": exact,
            "estimates": rv.estimates,
            "experimental": policy.is_experimental(),
        }),
        notes,
        ..Default::default()
    })
}

fn bounds(p: &Params) -> Res {
    let (seq, doc) = load_sequence(p)?;
    let phi = phi_of(&doc)?;
    let mut reports: Vec<BoundReport> = vec![bound_global(&seq, &phi)?];
    let mut notes = Vec::new();
    let parts = seq.partitions();
    if !parts.is_empty() && parts.iter().all(|q| q.labels() == parts[0].labels()) {
        match bound_no_mixing(&seq, &parts[0], &phi) {
            Ok(r) => reports.push(r),
            Err(e) => notes.push(format!("no-mixing bound not applicable: {e}")),
        }
    }
    if seq.has_partitions() {
        for exit_rule in [true, false] {
            let meta = default_metastable_kernels(&seq, exit_rule)?;
            let mut r = bound_with_mixing(&seq, &meta, &phi)?;
            r.notes.push(if exit_rule { "exit-probability rule" } else { "stationary-mass rule" }.into());
            reports.push(r);
        }
    }
    let mut table = Table::new(&["bound", "precondition_ok", "bound_value", "exact_value", "dominates"]);
    let mut failures = Vec::new();
    for r in &reports {
        let label = match r.notes.last() {
            Some(rule) if r.bound_name == "multimodal-with-mixing" => format!("{} ({rule})", r.bound_name),
            _ => r.bound_name.to_string(),
        };
        table.push(vec![
            label.into(),
            r.precondition_ok.into(),
            r.bound_value.into(),
            r.exact_value.unwrap_or(f64::NAN).into(),
            r.dominates().into(),
        ]);
        if !r.dominates() {
            failures.push(format!(
                "{}: exact {} exceeds bound {}",
                r.bound_name,
                r.exact_value.unwrap_or(f64::NAN),
                r.bound_value
            ));
        }
    }
    Ok(Outcome {
        table,
        report: to_json(&reports),
        failures,
        notes,
    })
}

fn metastable_quality(p: &Params) -> Res {
    let chains = p.usize("replicates", 200)?;
    let seed = p.u64("seed", 0)?;
    let leak = p.f64("leak", 0.1)?;
    let times: Vec<usize> = p.list("times", &[2, 5, 10, 20])?;
    let mut table = Table::new(&["chain", "t", "states", "distance", "stay_term", "mixing_term", "bound", "holds"]);
    let mut failures = Vec::new();
    let mut rows = Vec::new();
    for c in 0..chains {
        let chain = random_metastable_chain(leak, &mut stream(seed, c as u64, 0, 0))?;
        for &t in &times {
            let q = bound_metastable_quality(&chain.kernel, t, &chain.regions, &chain.mu)?;
            table.push(vec![
                c.into(),
                t.into(),
                chain.regions.state_count().into(),
                q.distance.into(),
                q.stay_term.into(),
                q.mixing_term.into(),
                q.bound.into(),
                q.holds().into(),
            ]);
            if !q.holds() {
                failures.push(format!("chain {c}, t = {t}: distance {} > bound {}", q.distance, q.bound));
            }
            rows.push(json!({"chain": c, "t": t, "quality": q}));
        }
    }
    Ok(Outcome {
        table,
        report: Value::Array(rows),
        failures,
        ..Default::default()
    })
}

fn growth(p: &Params) -> Res {
    let m = p.usize("M", 1001)?;
    let geometry = BarycentricGeometry::new(p.f64("rho", DEFAULT_RHO)?, p.usize("j0", 0)?)?;
    let s = growth_constants_series(m.saturating_sub(1), beta(p)?, &geometry)?;
    let mut table = Table::new(&["j", "B", "ratio"]);
    let (b, r) = (s.report.column("B").unwrap(), s.report.column("ratio").unwrap());
    for (i, j) in s.report.index.iter().enumerate() {
        table.push(vec![(*j as usize).into(), b[i].into(), r[i].into()]);
    }
    Ok(Outcome {
        table,
        notes: vec![format!("B_01 = {}, B_12 = {}", s.b01, s.b12)],
        report: to_json(&s),
        ..Default::default()
    })
}

fn drift(p: &Params) -> Res {
    let m = p.usize("M", 50)?;
    let r = drift_verify(m, beta(p)?)?;
    let mut table = Table::new(&["n1", "n2", "n3", "d_c", "drift", "bound", "slack"]);
    for (s, d, dr, b, sl) in &r.rows {
        table.push(vec![
            s.counts[0].into(),
            s.counts[1].into(),
            s.counts[2].into(),
            (*d).into(),
            (*dr).into(),
            (*b).into(),
            (*sl).into(),
        ]);
    }
    let failures = if r.violations > 0 {
        vec![format!(
            "drift inequality fails at {} states; worst slack {} at {:?}",
            r.violations, r.worst_slack, r.witness.counts
        )]
    } else {
        vec![]
    };
    Ok(Outcome {
        table,
        report: json!({
            "m": r.m,
            "states_checked": r.states_checked,
            "violations": r.violations,
            "worst_slack": r.worst_slack,
            "witness": r.witness,
        }),
        failures,
        ..Default::default()
    })
}

fn jump_variance(p: &Params) -> Res {
    let grid: Vec<usize> = match p.opt_string("M") {
        Some(_) => vec![p.usize("M", 100)?],
        None => p.list("grid", &[100, 200, 300])?,
    };
    let (floor, reports) = jump_variance_floor(&grid, beta(p)?, 0.001)?;
    let mut table = Table::new(&["M", "min_scaled_variance", "argmin_n1", "argmin_n2", "argmin_n3"]);
    for r in &reports {
        table.push(vec![
            r.m.into(),
            r.min_scaled_variance.into(),
            r.argmin.counts[0].into(),
            r.argmin.counts[1].into(),
            r.argmin.counts[2].into(),
        ]);
    }
    Ok(Outcome {
        table,
        notes: vec![match floor {
            Some(m) => format!("Var·M² ≥ 0.001 for every grid size from {m} on"),
            None => "no grid size from which Var·M² ≥ 0.001 holds throughout".into(),
        }],
        report: json!({"floor": floor, "reports": reports}),
        ..Default::default()
    })
}

fn curvature(p: &Params) -> Res {
    let m = p.usize("M", 10_000_000)?;
    let geometry = BarycentricGeometry::new(p.f64("rho", DEFAULT_RHO)?, p.usize("j0", 0)?)?;
    let pairs = p.usize("pairs", 10_000)?;
    let seed = p.u64("seed", 0)?;
    let modes: Vec<usize> = match p.opt_string("mode") {
        Some(_) => vec![p.usize("mode", 0)?],
        None => vec![0, 1, 2, 3],
    };
    let beta = beta(p)?;
    let mut table = Table::new(&["mode", "region_size", "pairs", "min_scaled_kappa"]);
    let mut reports = Vec::new();
    for mode in modes {
        let selection = if pairs == 0 {
            PairSelection::Exhaustive
        } else {
            PairSelection::Sampled {
                count: pairs,
                seed: seed.wrapping_add(mode as u64),
            }
        };
        let r = curvature_check(m, beta, &geometry, mode, selection)?;
        table.push(vec![
            mode.into(),
            r.region_size.into(),
            r.pairs.into(),
            r.min_scaled_kappa.into(),
        ]);
        reports.push(r);
    }
    Ok(Outcome {
        table,
        report: to_json(&reports),
        ..Default::default()
    })
}

fn coupling(p: &Params) -> Res {
    let m = p.usize("M", 50)?;
    let replicates = p.usize("replicates", 10_000)?;
    let mf = m as f64;
    let default_times = [5 * m, (9.0 * mf * mf.ln()).ceil() as usize];
    let times: Vec<usize> = p.list("times", &default_times)?;
    let r = coupling_tail(m, beta(p)?, &times, replicates, p.u64("seed", 0)?).map_err(|e| match e {
        msmc::Error::InvalidParameter(msg) if msg.contains("Hamming") => Failure::Assertion(msg),
        other => other.into(),
    })?;
    let mut table = Table::new(&["t", "empirical", "std_error", "bound"]);
    let mut failures = Vec::new();
    for row in &r.rows {
        table.push(vec![row.t.into(), row.empirical.into(), row.std_error.into(), row.bound.into()]);
        if row.empirical > row.bound + 4.0 * row.std_error {
            failures.push(format!(
                "t = {}: tail {} above bound {} + 4σ",
                row.t, row.empirical, row.bound
            ));
        }
    }
    Ok(Outcome {
        table,
        report: to_json(&r),
        failures,
        ..Default::default()
    })
}

fn hitting(p: &Params) -> Res {
    let grid: Vec<usize> = p.list("grid", &[100, 200, 400, 800])?;
    let r = hitting_scaling(
        &grid,
        beta(p)?,
        p.f64("rho", 0.02)?,
        p.usize("replicates", 200)?,
        p.f64("cap_factor", 1000.0)?,
        p.u64("seed", 0)?,
    )?;
    let mut table = Table::new(&["M", "median", "q90", "q99", "mean", "scaled_median", "censored"]);
    for h in &r.reports {
        table.push(vec![
            h.m.into(),
            h.median.into(),
            h.q90.into(),
            h.q99.into(),
            h.mean.into(),
            h.scaled_median.into(),
            h.censored.into(),
        ]);
    }
    Ok(Outcome {
        table,
        notes: vec![format!(
            "median ≈ {:.4} · M ln M + {:.1} (R² = {:.4})",
            r.fit.slope, r.fit.intercept, r.fit.r_squared
        )],
        report: to_json(&r),
        ..Default::default()
    })
}

fn escape(p: &Params) -> Res {
    let r = escape_experiment(
        p.usize("M", 400)?,
        beta(p)?,
        p.f64("rho", 0.02)?,
        p.usize("mode", CENTRAL_MODE)?,
        p.usize("steps", 100_000)?,
        p.usize("replicates", 1000)?,
        p.u64("seed", 0)?,
    )?;
    let mut table = Table::new(&["M", "rho", "steps", "replicates", "escapes", "escape_fraction", "bound"]);
    table.push(vec![
        r.m.into(),
        r.rho.into(),
        r.steps.into(),
        r.replicates.into(),
        r.escapes.into(),
        r.escape_fraction.into(),
        r.bound.into(),
    ]);
    Ok(Outcome {
        table,
        report: to_json(&r),
        ..Default::default()
    })
}

fn riemann(p: &Params) -> Res {
    let m = p.usize("moment", 0)?;
    let m = u32::try_from(m).map_err(|_| Failure::Input("moment too large".into()))?;
    let delta = p.f64("delta", 0.3)?;
    let radii: Vec<f64> = p.list("radii", &[0.4, 0.2, 0.1, 0.05])?;
    let mut table = Table::new(&["R", "psi", "limit", "abs_error", "log10_error"]);
    let mut rows = Vec::new();
    for &r in &radii {
        let g = riemann_gauss(m, r, delta)?;
        let l = riemann_gauss_log10_error(m, r, delta)?;
        table.push(vec![r.into(), g.psi.into(), g.limit.into(), g.error.into(), l.into()]);
        rows.push(json!({"R": r, "direct": g, "log10_error": if l.is_finite() { json!(l) } else { json!("-inf") }}));
    }
    Ok(Outcome {
        table,
        report: Value::Array(rows),
        notes: vec!["log10_error is the exact error from the dual series; abs_error is limited by double precision".into()],
        ..Default::default()
    })
}

fn loglik(p: &Params) -> Res {
    let form = match p.string("form", "square").as_str() {
        "square" => LogLikForm::Square,
        "cube" => LogLikForm::Cube,
        other => return Err(Failure::Input(format!("form must be square or cube, got '{other}'"))),
    };
    let r = asymptotic_loglik_check(p.usize("resolution", 1000)?, beta(p)?, form)?;
    let mut table = Table::new(&["center", "value"]);
    for (i, v) in r.center_values.iter().enumerate() {
        table.push(vec![i.into(), (*v).into()]);
    }
    Ok(Outcome {
        table,
        notes: vec![format!(
            "best c = {:.6} at {:?}; centre spread {:.3e}",
            r.best_c, r.argmin, r.center_spread
        )],
        report: to_json(&r),
        ..Default::default()
    })
}

fn local_tv(p: &Params) -> Res {
    let grid: Vec<usize> = p.list("grid", &[200, 400, 800, 1600])?;
    let rho = p.f64("rho", 0.02)?;
    let beta = beta(p)?;
    let profiles = grid
        .iter()
        .map(|&m| local_tv_profile(m, rho, beta))
        .collect::<Result<Vec<_>, _>>()?;
    let mut table = Table::new(&["M", "mode", "mode_mass", "lambda_mass", "tv", "border_fraction"]);
    for prof in &profiles {
        for row in &prof.rows {
            table.push(vec![
                prof.m.into(),
                row.mode.into(),
                row.mode_mass.into(),
                row.lambda_mass.into(),
                row.tv.into(),
                row.border_fraction.into(),
            ]);
        }
    }
    let fits: Vec<_> = (0..4).map(|i| LocalTvProfile::decay_exponent(&profiles, i)).collect();
    Ok(Outcome {
        table,
        notes: fits
            .iter()
            .enumerate()
            .map(|(i, f)| match f {
                Some(f) => format!("mode {i}: tv ∝ M^{:.3}", f.slope),
                None => format!("mode {i}: distance vanishes on the grid"),
            })
            .collect(),
        report: json!({"profiles": profiles, "decay_fits": fits}),
        ..Default::default()
    })
}

fn contour(p: &Params) -> Res {
    let m = p.usize("M", 1000)?;
    let stride = p.usize("stride", 1)?;
    let betas: Vec<f64> = match p.opt_f64("beta_tilde")? {
        Some(b) => vec![b],
        None => vec![BETA_C / 2.0, BETA_C, 2.0 * BETA_C],
    };
    let mut table = Table::new(&["beta_tilde", "s1", "s2", "s3", "log_pmf"]);
    let mut notes = Vec::new();
    let mut grids = Vec::new();
    for b in betas {
        let g = contour_grid(b, m, stride)?;
        for pt in &g.points {
            table.push(vec![b.into(), pt.s1.into(), pt.s2.into(), pt.s3.into(), pt.log_pmf.into()]);
        }
        notes.push(format!("β̃ = {b:.6}: {} local maxima", g.maxima.len()));
        grids.push(json!({"beta_tilde": b, "maxima": g.maxima}));
    }
    Ok(Outcome {
        table,
        report: Value::Array(grids),
        notes,
        ..Default::default()
    })
}
