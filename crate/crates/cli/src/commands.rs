use std::fs;

use horoflow::flow::{geometric_grid, xi_series};
use horoflow::horosum::{
    default_n_max, i_ratio_test, j_sum_exact, j_sum_mc, key_lemma_statistic, local_limit_fit, KeyLemmaParams,
};
use horoflow::model::{nonarithmeticity_report, refine_roof};
use horoflow::pressure::{cycle_domain_probe, legendre_h, solve_pressure};
use horoflow::{
    BasicSet, BlMeasure, FlowModel, JQuery, ModelFile, PressureConfig, SymbolGenerator, SymbolicState, Word,
};
use rayon::prelude::*;
use serde::Serialize;

use crate::args::{
    Command, Common, JsumArgs, KeyLemmaArgs, LegendreArgs, LocalLimitArgs, MeasureArgs, PointArgs, ProbeArgs,
    RatioArgs, RefineArgs, SetSpec, SimulateArgs, ValidateArgs,
};
use crate::output::{indexed, num, sha256_hex, write_run, Manifest, ModelRef, Table};
use crate::CliError;

type Result<T> = std::result::Result<T, CliError>;

pub fn run(cmd: Command) -> Result<()> {
    match cmd {
        Command::Validate(a) => validate(a),
        Command::Pressure(a) => pressure(a, false),
        Command::Cycle(a) => pressure(a, true),
        Command::Legendre(a) => legendre(a),
        Command::Probe(a) => probe(a),
        Command::Measure(a) => measure(a),
        Command::Simulate(a) => simulate(a),
        Command::Jsum(a) => jsum(a),
        Command::RatioTest(a) => ratio_test(a),
        Command::LocalLimit(a) => local_limit(a),
        Command::KeyLemma(a) => key_lemma(a),
        Command::RefineCheck(a) => refine_check(a),
    }
}

struct Loaded {
    model: FlowModel,
    model_ref: ModelRef,
}

fn load(common: &Common) -> Result<Loaded> {
    let bytes = fs::read(&common.model)
        .map_err(|e| CliError::Input(format!("cannot read {}: {e}", common.model.display())))?;
    let text = String::from_utf8(bytes.clone()).map_err(|e| CliError::Input(format!("model file: {e}")))?;
    let model = ModelFile::from_json(&text)?.build()?;
    Ok(Loaded {
        model,
        model_ref: ModelRef {
            path: common.model.clone(),
            sha256: sha256_hex(&bytes),
        },
    })
}

fn finish(name: &str, common: &Common, params: &impl Serialize, loaded: Loaded, tables: &[Table]) -> Result<()> {
    if let Some(dir) = &common.out {
        let params = serde_json::to_value(params).map_err(|e| CliError::Input(e.to_string()))?;
        let manifest = Manifest::new(name, loaded.model_ref, params, common.seed);
        write_run(dir, tables, manifest)?;
    }
    Ok(())
}

fn config(common: &Common) -> PressureConfig {
    PressureConfig::with_rhs(common.rhs)
}

/// Runs `f` over the grid on a pool of `--jobs` threads, keeping grid order.
fn par_grid<T: Send>(jobs: Option<usize>, grid: &[f64], f: impl Fn(f64) -> Result<T> + Sync) -> Result<Vec<T>> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.unwrap_or(0))
        .build()
        .map_err(|e| CliError::Input(e.to_string()))?;
    pool.install(|| grid.par_iter().map(|&t| f(t)).collect())
}

fn tilt(u: &[f64], m: &FlowModel) -> Result<Vec<f64>> {
    match u.len() {
        0 => Ok(vec![0.0; m.d()]),
        n if n == m.d() => Ok(u.to_vec()),
        n => Err(CliError::Input(format!("--u has {n} components, the model has d = {}", m.d()))),
    }
}

fn word(m: &FlowModel, text: &str) -> Result<Word> {
    Ok(m.ts().parse_word(text)?)
}

fn basic_set(m: &FlowModel, spec: &SetSpec) -> Result<BasicSet> {
    let xi = if spec.xi.is_empty() { vec![0; m.d()] } else { spec.xi.clone() };
    Ok(BasicSet::new(m, word(m, &spec.word)?, xi, spec.alpha, spec.beta)?)
}

fn ints(v: &[i64]) -> impl Iterator<Item = String> + '_ {
    v.iter().map(|x| x.to_string())
}

fn nums(v: &[f64]) -> impl Iterator<Item = String> + '_ {
    v.iter().map(|&x| num(x))
}

fn show(v: &[f64]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

fn validate(a: ValidateArgs) -> Result<()> {
    let loaded = load(&a.common)?;
    let m = &loaded.model;
    let v = m.validation();
    let mixing = m.ts().mixing_exponent()?;
    let bridges = m.ts().bridge_words()?;
    let rep = nonarithmeticity_report(m, a.max_period)?;
    println!("n0={}", v.n0);
    println!("min_roof={}", v.min_roof);
    println!("mixing_exponent={mixing}");
    println!("bridge_length={}", bridges.bridge_length());
    println!("f_rank={}", rep.f_rank);
    println!("irrational_ratio={}", rep.irrational_ratio);
    println!("lattice={}", rep.lattice);
    let mut t = Table::new(
        "validate.csv",
        ["n0", "min_roof", "mixing_exponent", "bridge_length", "f_rank", "irrational_ratio", "lattice"]
            .map(String::from)
            .to_vec(),
    );
    t.push(vec![
        v.n0.to_string(),
        num(v.min_roof),
        mixing.to_string(),
        bridges.bridge_length().to_string(),
        rep.f_rank.to_string(),
        rep.irrational_ratio.to_string(),
        rep.lattice.to_string(),
    ]);
    finish("validate", &a.common, &a, loaded, &[t])
}

fn pressure(a: PointArgs, cycle_only: bool) -> Result<()> {
    let loaded = load(&a.common)?;
    let m = match a.depth {
        Some(k) => loaded.model.higher_block(k)?,
        None => loaded.model.clone(),
    };
    let u = tilt(&a.u, &m)?;
    let pp = solve_pressure(&m, &u, &config(&a.common))?;
    let d = m.d();
    let (name, table) = if cycle_only {
        println!("Xi={}", show(&pp.xi));
        let mut t = Table::new("cycle.csv", [indexed("u", d), indexed("Xi", d)].concat());
        t.push(nums(&u).chain(nums(&pp.xi)).collect());
        ("cycle", t)
    } else {
        println!("P={}", pp.p);
        println!("Xi={}", show(&pp.xi));
        println!("residual={:e}", pp.residual);
        let header = [
            indexed("u", d),
            vec!["P".into()],
            indexed("Xi", d),
            vec!["int_r".into(), "residual".into()],
        ]
        .concat();
        let mut t = Table::new("pressure.csv", header);
        t.push(
            nums(&u)
                .chain([num(pp.p)])
                .chain(nums(&pp.xi))
                .chain([num(pp.int_r), num(pp.residual)])
                .collect(),
        );
        ("pressure", t)
    };
    finish(name, &a.common, &a, loaded, &[table])
}

fn legendre(a: LegendreArgs) -> Result<()> {
    let loaded = load(&a.common)?;
    let m = &loaded.model;
    if a.xi.len() != m.d() {
        return Err(CliError::Input(format!("--Xi needs {} components", m.d())));
    }
    let rv = legendre_h(m, &a.xi, &config(&a.common))?;
    println!("H={}", rv.h);
    println!("u_star={}", show(&rv.u_star));
    let d = m.d();
    let header = [
        indexed("Xi", d),
        vec!["H".into()],
        indexed("u_star", d),
        vec!["gradient_error".into()],
    ]
    .concat();
    let mut t = Table::new("legendre.csv", header);
    t.push(
        nums(&a.xi)
            .chain([num(rv.h)])
            .chain(nums(&rv.u_star))
            .chain([num(rv.gradient_error)])
            .collect(),
    );
    finish("legendre", &a.common, &a, loaded, &[t])
}

fn probe(a: ProbeArgs) -> Result<()> {
    let loaded = load(&a.common)?;
    let m = &loaded.model;
    let d = m.d();
    let directions: Vec<Vec<f64>> = if a.u.is_empty() {
        (0..d)
            .flat_map(|i| {
                [1.0, -1.0].map(|s| {
                    let mut e = vec![0.0; d];
                    e[i] = s;
                    e
                })
            })
            .collect()
    } else {
        vec![tilt(&a.u, m)?]
    };
    let series = cycle_domain_probe(m, &directions, a.t_max, &config(&a.common))?;
    let mut t = Table::new("probe.csv", [vec!["direction".into(), "t".into()], indexed("Xi", d)].concat());
    for (i, s) in series.iter().enumerate() {
        println!(
            "direction={} boundary_estimate={} monotone={}",
            show(&s.direction),
            show(&s.boundary_estimate),
            s.monotone
        );
        for (tt, xi) in s.t.iter().zip(&s.xi) {
            t.push([i.to_string(), num(*tt)].into_iter().chain(nums(xi)).collect());
        }
    }
    finish("probe", &a.common, &a, loaded, &[t])
}

fn measure(a: MeasureArgs) -> Result<()> {
    let loaded = load(&a.common)?;
    let m = &loaded.model;
    let u = tilt(&a.u, m)?;
    let blm = BlMeasure::new(m, &u, &config(&a.common), a.density)?;
    let e = basic_set(m, &SetSpec::from(&a.set))?;
    let nu = blm.cylinder_nu(&e.a)?;
    let weighted = blm.weighted_cylinder(&e.a)?;
    let mass = blm.basic_set_mass(&e)?;
    println!("P={}", blm.p());
    println!("nu={nu}");
    println!("weighted_cylinder={weighted}");
    println!("mass={mass}");
    let mut t = Table::new("measure.csv", ["P", "nu", "weighted_cylinder", "mass"].map(String::from).to_vec());
    t.push(vec![num(blm.p()), num(nu), num(weighted), num(mass)]);
    finish("measure", &a.common, &a, loaded, &[t])
}

fn simulate(a: SimulateArgs) -> Result<()> {
    let loaded = load(&a.common)?;
    let m = &loaded.model;
    let u = tilt(&a.u, m)?;
    if !(a.t_min > 0.0 && a.horizon >= a.t_min) || a.points == 0 {
        return Err(CliError::Input("need 0 < --t-min <= --T and --points >= 1".into()));
    }
    let gibbs = solve_pressure(m, &u, &config(&a.common))?.gibbs;
    let st = SymbolicState::new(m, SymbolGenerator::gibbs_chain(&gibbs, a.common.seed), vec![0; m.d()], 0.0)?;
    let rec = xi_series(&st, m, &geometric_grid(a.t_min, a.horizon, a.points))?;
    let d = m.d();
    let mut t = Table::new("orbit.csv", [vec!["T".into()], indexed("xi", d), indexed("slope", d)].concat());
    for ((tt, xi), slope) in rec.times.iter().zip(&rec.xi_values).zip(&rec.slopes) {
        t.push([num(*tt)].into_iter().chain(ints(xi)).chain(nums(slope)).collect());
    }
    if let Some(last) = rec.slopes.last() {
        println!("final_slope={}", show(last));
    }
    finish("simulate", &a.common, &a, loaded, &[t])
}

fn t_values(single: Option<f64>, grid: Option<crate::args::Grid>) -> Result<Vec<f64>> {
    match (single, grid) {
        (Some(t), None) => Ok(vec![t]),
        (None, Some(g)) => Ok(g.points()),
        _ => Err(CliError::Input("give exactly one of --T and --T-grid".into())),
    }
}

fn jsum(a: JsumArgs) -> Result<()> {
    let loaded = load(&a.common)?;
    let m = &loaded.model;
    let u = tilt(&a.u, m)?;
    let cfg = config(&a.common);
    let blm = BlMeasure::new(m, &u, &cfg, a.density)?;
    let e = basic_set(m, &SetSpec::from(&a.set))?;
    let x_star = word(m, &a.x_star)?;
    if a.xi_star.len() != m.d() {
        return Err(CliError::Input(format!("--xi-star needs {} components", m.d())));
    }
    let times = t_values(a.t_sharp, a.t_grid)?;
    let rows = par_grid(a.common.jobs, &times, |t| {
        let q = JQuery {
            x_star: x_star.clone(),
            xi0: e.xi.clone(),
            xi_star: a.xi_star.clone(),
            t_sharp: t,
            e: e.clone(),
            n_max: match a.n_max {
                Some(n) => n,
                None => default_n_max(m, t, e.beta)?,
            },
        };
        Ok(match a.samples {
            Some(n) => {
                let est = j_sum_mc(m, &blm, &q, n, a.common.seed, &cfg)?;
                (t, est.estimate, est.stderr)
            }
            None => (t, j_sum_exact(m, &blm, &q)?, 0.0),
        })
    })?;
    let method = if a.samples.is_some() { "mc" } else { "exact" };
    let header = [
        vec!["T_sharp".into()],
        indexed("xi_star", m.d()),
        ["J", "stderr", "method"].map(String::from).to_vec(),
    ]
    .concat();
    let mut table = Table::new("jsum.csv", header);
    for (t, j, se) in rows {
        println!("T_sharp={t} J={j} stderr={se}");
        table.push(
            [num(t)]
                .into_iter()
                .chain(ints(&a.xi_star))
                .chain([num(j), num(se), method.to_string()])
                .collect(),
        );
    }
    finish("jsum", &a.common, &a, loaded, &[table])
}

fn ratio_test(a: RatioArgs) -> Result<()> {
    let loaded = load(&a.common)?;
    let m = &loaded.model;
    let u = tilt(&a.u, m)?;
    let e1 = basic_set(m, &a.e1)?;
    let e2 = basic_set(m, &a.e2)?;
    let r = i_ratio_test(m, &u, &e1, &e2, a.t_sharp, a.manifolds, a.common.seed, &config(&a.common))?;
    println!("lhs={}", r.lhs);
    println!("rhs={}", r.rhs);
    println!("log_discrepancy={}", r.log_discrepancy);
    let mut summary = Table::new("ratio.csv", ["lhs", "rhs", "log_discrepancy"].map(String::from).to_vec());
    summary.push(vec![num(r.lhs), num(r.rhs), num(r.log_discrepancy)]);
    let header = [vec!["window".into()], indexed("xi_star", m.d()), vec!["J1".into(), "J2".into()]].concat();
    let mut windows = Table::new("ratio_windows.csv", header);
    for (i, ((xi, j1), j2)) in r.xi_star.iter().zip(&r.j1).zip(&r.j2).enumerate() {
        windows.push([i.to_string()].into_iter().chain(ints(xi)).chain([num(*j1), num(*j2)]).collect());
    }
    finish("ratio-test", &a.common, &a, loaded, &[summary, windows])
}

fn local_limit(a: LocalLimitArgs) -> Result<()> {
    let loaded = load(&a.common)?;
    let m = &loaded.model;
    let u = tilt(&a.u, m)?;
    let e = basic_set(m, &SetSpec::from(&a.set))?;
    let x_star = word(m, &a.x_star)?;
    let fit = local_limit_fit(m, &u, &x_star, &a.t_grid.points(), &e, &config(&a.common))?;
    println!("H_hat={}", fit.h_hat);
    println!("H_ref={}", fit.h_ref);
    println!("poly_exponent={}", fit.poly_exponent);
    println!("r2={}", fit.r2);
    let header = [
        vec!["T_sharp".into()],
        indexed("xi_star", m.d()),
        ["J", "H_ref", "fit_residual"].map(String::from).to_vec(),
    ]
    .concat();
    let mut points = Table::new("local_limit.csv", header);
    for p in &fit.points {
        points.push(
            [num(p.t_sharp)]
                .into_iter()
                .chain(ints(&p.xi_star))
                .chain([num(p.j), num(p.h_ref), num(p.fit_residual)])
                .collect(),
        );
    }
    let mut summary = Table::new(
        "fit.csv",
        ["H_hat", "H_ref", "poly_exponent", "intercept", "r2"].map(String::from).to_vec(),
    );
    summary.push(vec![num(fit.h_hat), num(fit.h_ref), num(fit.poly_exponent), num(fit.intercept), num(fit.r2)]);
    finish("local-limit", &a.common, &a, loaded, &[points, summary])
}

fn key_lemma(a: KeyLemmaArgs) -> Result<()> {
    let loaded = load(&a.common)?;
    let m = &loaded.model;
    let u = tilt(&a.u, m)?;
    let cfg = config(&a.common);
    let times = t_values(a.t_sharp, a.t_grid)?;
    let stats = par_grid(a.common.jobs, &times, |t| {
        let params = KeyLemmaParams {
            big_n: a.big_n,
            eps0: a.eps0,
            n: a.n,
            t_sharp: t,
            samples: a.samples,
            seed: a.common.seed,
        };
        Ok((t, key_lemma_statistic(m, &u, &params, &cfg)?))
    })?;
    let mut table = Table::new("key_lemma.csv", ["T_sharp", "fraction", "accepted"].map(String::from).to_vec());
    for (t, s) in stats {
        println!("T_sharp={t} fraction={} accepted={}", s.fraction, s.accepted);
        table.push(vec![num(t), num(s.fraction), s.accepted.to_string()]);
    }
    finish("key-lemma", &a.common, &a, loaded, &[table])
}

fn refine_check(a: RefineArgs) -> Result<()> {
    let loaded = load(&a.common)?;
    let m = &loaded.model;
    let u = tilt(&a.u, m)?;
    let cfg = config(&a.common);
    let p = solve_pressure(m, &u, &cfg)?.p;
    let rows = par_grid(a.common.jobs, &a.eps_star, |eps| {
        let fine = refine_roof(m, eps)?;
        let pf = solve_pressure(&fine, &u, &cfg)?.p;
        Ok((eps, pf, fine.n_states()))
    })?;
    let header = ["eps_star", "P", "P_refined", "abs_diff", "states", "refined_states"]
        .map(String::from)
        .to_vec();
    let mut table = Table::new("refine.csv", header);
    for (eps, pf, states) in rows {
        println!("eps_star={eps} P={p} P_refined={pf} abs_diff={:e}", (p - pf).abs());
        table.push(vec![
            num(eps),
            num(p),
            num(pf),
            num((p - pf).abs()),
            m.n_states().to_string(),
            states.to_string(),
        ]);
    }
    finish("refine-check", &a.common, &a, loaded, &[table])
}
