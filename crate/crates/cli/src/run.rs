//! `cforge run`: builds the scenario, drives the stages and writes artifacts.

use std::cell::RefCell;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use cforge::fieldlab::snapshot::{read_field, read_immersion, write_field, write_immersion};
use cforge::fieldlab::pullback_metric;
use cforge::{Field, GridDomain, ImmersionField};
use cforge::profiles::CorrugationProfile;
use cforge::stage::{make_global_params, run, GlobalParams, InitOptions, RunReport, StageOptions, TraceRecord, Tracer};
use cforge::symcore::n_star;
use cforge::{PrimitiveBasis, SymMatrix};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::config::{RunConfig, Scenario};
use crate::mesh::{to_obj, Projection};
use crate::CliError;

pub const TRACE_FILE: &str = "trace.jsonl";
pub const SUMMARY_FILE: &str = "summary.json";
pub const METRIC_SNAPSHOT: &str = "metric.snap";
pub const START_SNAPSHOT: &str = "u_start.snap";
pub const FINAL_SNAPSHOT: &str = "u_final.snap";

/// Lattice modes used by the seeded perturbations: every q ∈ {−1, 0, 1}^n
/// with a positive leading nonzero entry.
fn low_modes(n: usize) -> Vec<Vec<i64>> {
    let mut out = vec![];
    let total = 3usize.pow(n as u32);
    for code in 0..total {
        let mut c = code;
        let q: Vec<i64> = (0..n)
            .map(|_| {
                let v = (c % 3) as i64 - 1;
                c /= 3;
                v
            })
            .collect();
        if q.iter().find(|&&v| v != 0).is_some_and(|&v| v > 0) {
            out.push(q);
        }
    }
    out
}

/// Smooth periodic field with sup norm at most `amp`: a random combination
/// of the lowest lattice modes, drawn from `rng`.
pub fn seeded_smooth(dom: &GridDomain, ncomp: usize, amp: f64, rng: &mut ChaCha8Rng) -> Field {
    let modes = low_modes(dom.n);
    let coef: Vec<(f64, f64)> = (0..ncomp * modes.len()).map(|_| (rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
    let scale = amp / (2.0 * modes.len() as f64);
    let k0 = std::f64::consts::TAU / dom.period;
    Field::from_fn(dom, ncomp, |x, o| {
        for (c, oc) in o.iter_mut().enumerate() {
            *oc = modes
                .iter()
                .enumerate()
                .map(|(m, q)| {
                    let t = k0 * q.iter().zip(x).map(|(&qa, &xa)| qa as f64 * xa).sum::<f64>();
                    let (a, b) = coef[c * modes.len() + m];
                    a * t.cos() + b * t.sin()
                })
                .sum::<f64>()
                * scale;
        }
    })
}

fn seeded_metric(dom: &GridDomain, amp: f64, rng: &mut ChaCha8Rng) -> Field {
    let n = dom.n;
    let packed = seeded_smooth(dom, n * (n + 1) / 2, amp, rng);
    let mut out = Field::zeros(dom, n * n);
    for p in 0..dom.npts() {
        let m = SymMatrix::from_packed(n, packed.at(p));
        out.at_mut(p).copy_from_slice(m.as_slice());
    }
    out
}

pub struct Problem {
    pub g: Field,
    pub u: ImmersionField,
    pub gp: GlobalParams,
    pub skip_init: bool,
}

/// Builds (g, ū) and the global parameters for a scenario.
pub fn build_problem(cfg: &RunConfig) -> Result<Problem, CliError> {
    let n = cfg.n;
    let dom = GridDomain::new(n, cfg.grid.points_per_axis, cfg.grid.period)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seeds.master);
    let basis = PrimitiveBasis::new(n)?;
    let scale_from = |g: &Field, u: &ImmersionField| -> f64 {
        cfg.deficit_scale.unwrap_or_else(|| 0.5 * g.sub(&pullback_metric(u)).min_eigenvalue())
    };
    let (g, u, gp, skip_init) = match &cfg.scenario {
        Scenario::ManufacturedDeficit { perturbation } => {
            let gp = make_global_params(n, cfg.eps, cfg.deficit_scale.unwrap_or(1.0), cfg.a)?;
            let u = ImmersionField::inclusion(&dom, 2 * n, 1.0)?;
            let mut def = Field::constant_metric(&dom, &basis.h_star);
            if *perturbation != 0.0 {
                def = def.add(&seeded_metric(&dom, *perturbation, &mut rng));
            }
            let g = pullback_metric(&u).add(&def.scale(gp.delta(1)));
            (g, u, gp, true)
        }
        Scenario::ShrunkInclusion { shrink, perturbation } => {
            let mut u = ImmersionField::inclusion(&dom, 2 * n, *shrink)?;
            if *perturbation != 0.0 {
                u = u.add_periodic(&seeded_smooth(&dom, 2 * n, *perturbation, &mut rng));
            }
            let g = Field::constant_metric(&dom, &SymMatrix::identity(n));
            let gp = make_global_params(n, cfg.eps, scale_from(&g, &u), cfg.a)?;
            (g, u, gp, false)
        }
        Scenario::Custom { metric, immersion, skip_init } => {
            let g: Field = read_field(metric).map_err(|e| e.context(format!("metric snapshot {}", metric.display())))?;
            let u: ImmersionField =
                read_immersion(immersion).map_err(|e| e.context(format!("immersion snapshot {}", immersion.display())))?;
            if g.ncomp != n * n || u.n() != n || g.domain != u.values.domain {
                return Err(CliError::Config(crate::config::ConfigError::Invalid {
                    key: "scenario",
                    message: format!("snapshots do not match n = {n} on a common grid"),
                }));
            }
            let gp = make_global_params(n, cfg.eps, scale_from(&g, &u), cfg.a)?;
            (g, u, gp, *skip_init)
        }
    };
    Ok(Problem { g, u, gp, skip_init })
}

#[derive(Serialize)]
struct Summary<'a> {
    status: &'a str,
    exit_code: i32,
    error: Option<String>,
    config: &'a RunConfig,
    params: Option<&'a GlobalParams>,
    n_star: usize,
    report: Option<&'a RunReport>,
}

pub struct RunOutcome {
    pub report: RunReport,
    pub out_dir: PathBuf,
}

fn io_err(path: &Path, e: std::io::Error) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

/// Runs the configured scenario. The trace is streamed to disk, so it
/// survives a failing stage; the summary is written in every case.
pub fn cmd_run(cfg: &RunConfig) -> Result<RunOutcome, CliError> {
    let out = cfg.output.dir.clone();
    std::fs::create_dir_all(&out).map_err(|e| io_err(&out, e))?;
    let result = execute(cfg, &out);
    let (status, code, error, report, gp) = match &result {
        Ok((rep, gp)) => ("ok", 0, None, Some(rep), Some(gp)),
        Err((e, gp)) => ("error", e.exit_code(), Some(e.to_string()), None, gp.as_ref()),
    };
    let summary = Summary { status, exit_code: code, error, config: cfg, params: gp, n_star: n_star(cfg.n), report };
    let path = out.join(SUMMARY_FILE);
    let text = serde_json::to_string_pretty(&summary).expect("summary serializes");
    std::fs::write(&path, text + "\n").map_err(|e| io_err(&path, e))?;
    match result {
        Ok((report, _)) => Ok(RunOutcome { report, out_dir: out }),
        Err((e, _)) => Err(e),
    }
}

type Failure = (CliError, Option<GlobalParams>);

fn execute(cfg: &RunConfig, out: &Path) -> Result<(RunReport, GlobalParams), Failure> {
    let prob = build_problem(cfg).map_err(|e| (e, None))?;
    let gp = prob.gp.clone();
    let fail = |e: CliError| (e, Some(gp.clone()));
    let basis = PrimitiveBasis::new(cfg.n).map_err(|e| fail(e.into()))?;
    let profile = CorrugationProfile::standard().map_err(|e| fail(e.into()))?;

    let snap = |name: &str, f: &dyn Fn(&Path) -> cforge::Result<()>| -> Result<(), Failure> {
        let p = out.join(name);
        f(&p).map_err(|e| fail(e.into()))
    };
    snap(METRIC_SNAPSHOT, &|p| write_field(p, &prob.g))?;
    snap(START_SNAPSHOT, &|p| write_immersion(p, &prob.u))?;

    let stage_opts = StageOptions {
        mode: cfg.mode,
        ladder: cfg.ladder.clone(),
        corrector_depth: cfg.stage.corrector_depth,
        kallen_depth: cfg.stage.kallen_depth,
        ell_cap: cfg.stage.ell_cap,
        frame_bound: cfg.stage.frame_bound,
        ..StageOptions::default()
    };
    let init_opts = InitOptions {
        mode: cfg.mode,
        mu0: cfg.init.mu0,
        k: cfg.init.k,
        ell_cap: cfg.stage.ell_cap,
        frame_bound: cfg.stage.frame_bound,
        ..InitOptions::default()
    };

    let trace_path = out.join(TRACE_FILE);
    let writer = if cfg.export.traces {
        Some(RefCell::new(BufWriter::new(File::create(&trace_path).map_err(|e| fail(io_err(&trace_path, e)))?)))
    } else {
        None
    };
    let write_failed = RefCell::new(None::<std::io::Error>);
    let mut sink = |r: &TraceRecord| {
        if let Some(w) = &writer {
            if let Err(e) = writeln!(w.borrow_mut(), "{}", r.to_json_line()) {
                write_failed.borrow_mut().get_or_insert(e);
            }
        }
    };
    let mut tracer = Tracer::with_sink(&mut sink);
    let result = run(&basis, &prob.g, &prob.u, &gp, cfg.stages, prob.skip_init, &stage_opts, &init_opts, &profile, &mut tracer);
    drop(tracer);
    if let Some(w) = &writer {
        if let Err(e) = w.borrow_mut().flush() {
            write_failed.borrow_mut().get_or_insert(e);
        }
    }
    if let Some(e) = write_failed.into_inner() {
        return Err(fail(io_err(&trace_path, e)));
    }
    let (u, report) = result.map_err(|e| fail(e.into()))?;

    snap(FINAL_SNAPSHOT, &|p| write_immersion(p, &u))?;
    if cfg.export.csv {
        write_text(out, "deficits.csv", &deficits_csv(&report)).map_err(fail)?;
        write_text(out, "slice.csv", &slice_csv(&u)).map_err(fail)?;
    }
    if cfg.export.mesh {
        if cfg.n == 2 {
            let obj = to_obj(&u, Projection::First3).map_err(|e| fail(CliError::Mesh(e)))?;
            write_text(out, "final.obj", &obj).map_err(fail)?;
        } else {
            eprintln!("note: mesh export needs n = 2; wrote no mesh for n = {}", cfg.n);
        }
    }
    Ok((report, gp))
}

fn write_text(dir: &Path, name: &str, text: &str) -> Result<(), CliError> {
    let p = dir.join(name);
    std::fs::write(&p, text).map_err(|e| io_err(&p, e))
}

fn deficits_csv(rep: &RunReport) -> String {
    let mut s = String::from("index,deficit_g,deficit_gm\n");
    for (i, (a, b)) in rep.deficits_g.iter().zip(&rep.deficits_gm).enumerate() {
        s.push_str(&format!("{i},{a:.9e},{b:.9e}\n"));
    }
    s
}

/// Samples of u on the slice x_3 = … = x_n = 0 (the whole grid for n = 2).
fn slice_csv(u: &ImmersionField) -> String {
    let dom = u.domain();
    let (n, np) = (dom.n, dom.points_per_axis);
    let mut s = String::from("i,j,x1,x2");
    for r in 0..u.d {
        s.push_str(&format!(",u{}", r + 1));
    }
    s.push('\n');
    let mut idx = vec![0usize; n];
    let mut x = vec![0.0; n];
    for i in 0..np {
        for j in 0..np {
            idx[0] = i;
            idx[1] = j;
            let p = dom.flat_index(&idx);
            dom.coords(p, &mut x);
            s.push_str(&format!("{i},{j},{:.9e},{:.9e}", x[0], x[1]));
            for v in u.values.at(p) {
                s.push_str(&format!(",{v:.9e}"));
            }
            s.push('\n');
        }
    }
    s
}
