use std::fs;
use std::path::Path;

use anyhow::{anyhow, bail, Context};
use num_rational::BigRational;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use severi_core::equiv::{
    node_freedom_report, compute_partition, existence_window, falling_factorial, find_witness, verify_single_class,
    ClassReport, EngineConfig, EntryStatus, EquivError, GridEntry, ParamGrid, Partition,
};
use severi_core::gamma::{build_gamma, DegenerationCurve, NodeId};
use severi_core::lattice::{
    canonical_class, dim_bound_severi, dim_bound_tangency_sections, intersect, severi_numerology, smooth_genus,
    DivisorClass, SurfaceParam,
};
use severi_core::markings::{
    enumerate_moves, parse_trace, replay_trace, write_trace, Marking, MoveDocument, TraceRecord,
};
use severi_core::toric::{
    build_param, implicitize, random_generic_roots, LatticePolygon, Point, ToricError, ToricReport,
};

use crate::report::{opt, Report};
use crate::{Command, Failure, RunConfig, EXIT_BUDGET, EXIT_COUNTEREXAMPLE, EXIT_INPUT};

type Outcome = Result<(Report, u8), Failure>;

pub fn dispatch(cfg: &RunConfig) -> Outcome {
    let engine = EngineConfig { state_budget: cfg.state_budget };
    match &cfg.command {
        &Command::Lattice { n, d, k, g } => lattice(n, d, k, g),
        &Command::Gamma { n, d, k } => gamma_cmd(n, d, k),
        Command::Markings { n, d, k, r, irreducible, marking, apply, include_identity, replay, unchained } => {
            let gamma = build(*n, *d, *k)?;
            match (r, marking, replay) {
                (Some(r), _, _) => enumerate(&gamma, *r, *irreducible, &engine),
                (_, Some(path), _) => moves(&gamma, path, apply.as_deref(), *include_identity),
                (_, _, Some(path)) => replay_cmd(&gamma, path, !unchained),
                _ => Err(anyhow!("markings needs one of --r, --marking or --replay").into()),
            }
        }
        Command::Equiv { grid, n, d, k, r, witness, trace_out, dump_dir } => {
            if let Some(spec) = grid {
                return equiv_grid(spec.parse()?, spec, &engine);
            }
            let (Some(n), Some(d), Some(k)) = (n, d, k) else {
                return Err(anyhow!("equiv needs --grid or all of --n, --d, --k").into());
            };
            let gamma = build(*n, *d, *k)?;
            match (witness.as_deref(), r) {
                (Some([from, to]), _) => equiv_witness(&gamma, from, to, trace_out.as_deref(), &engine),
                (Some(_), _) => unreachable!("clap enforces two paths"),
                (None, Some(r)) => equiv_single(&gamma, *r, dump_dir.as_deref(), &engine),
                (None, None) => {
                    let spec = format!("n={n},d={d},k={k}");
                    equiv_grid(spec.parse()?, &spec, &engine)
                }
            }
        }
        Command::Toric { polygon, implicitize, roots } => toric(polygon, *implicitize, roots.as_deref(), cfg.seed),
    }
}

fn build(n: u32, d: u32, k: u32) -> Result<DegenerationCurve, Failure> {
    Ok(build_gamma(SurfaceParam::new(n), d.into(), k.into())?)
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> anyhow::Result<T> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

fn read_marking(gamma: &DegenerationCurve, path: &Path) -> anyhow::Result<Marking> {
    let nodes: Vec<NodeId> = read_json(path)?;
    Marking::new(gamma, &nodes).with_context(|| format!("marking in {}", path.display()))
}

fn lattice(n: u32, d: i64, k: i64, g: i64) -> Outcome {
    let sp = SurfaceParam::new(n);
    let num = severi_numerology(sp, d, k, g)?;
    let c = DivisorClass::new(sp, d, k);
    let result = json!({
        "n": n, "d": d, "k": k, "g": g,
        "smoothGenus": smooth_genus(&c)?,
        "selfIntersection": intersect(&c, &c)?,
        "canonicalDegree": intersect(&c, &canonical_class(sp))?,
        "numerology": num,
        "dimBoundSeveri": dim_bound_severi(&c, g)?,
        "dimBoundTangency": dim_bound_tangency_sections(&c, g)?,
    });
    let row = vec![
        n.to_string(),
        d.to_string(),
        k.to_string(),
        g.to_string(),
        num.delta.to_string(),
        num.delta_prime.to_string(),
        num.dim_lin_sys.to_string(),
        num.dim_severi.to_string(),
        num.r_max.to_string(),
    ];
    let header = ["n", "d", "k", "g", "delta", "deltaPrime", "dimLinSys", "dimSeveri", "rMax"];
    Ok((Report::new("lattice", result)?.with_table(&header, vec![row]), 0))
}

fn gamma_cmd(n: u32, d: u32, k: u32) -> Outcome {
    let gamma = build(n, d, k)?;
    let doc = gamma.to_document();
    let result = json!({
        "gamma": doc,
        "nodeCount": gamma.node_count(),
        "componentCount": gamma.component_count(),
        "connected": gamma.is_connected_after_removal(&[])?,
        "existenceWindow": existence_window(&gamma),
        "spanningTreeCount": gamma.spanning_tree_count().to_string(),
    });
    let rows = gamma
        .nodes()
        .iter()
        .enumerate()
        .map(|(i, q)| vec![i.to_string(), q.a().to_string(), q.b().to_string(), q.sheet().to_string()])
        .collect();
    Ok((Report::new("gamma", result)?.with_table(&["index", "a", "b", "sheet"], rows), 0))
}

fn budget_report(command: &'static str, required: u128, budget: u64, visited: u64) -> Outcome {
    log::error!("state budget exceeded: {required} states needed, budget {budget}");
    let result = json!({
        "status": "budgetExceeded",
        "requiredStates": required.to_string(),
        "stateBudget": budget,
        "statesVisited": visited,
    });
    Ok((Report::new(command, result)?, EXIT_BUDGET))
}

fn enumerate(gamma: &DegenerationCurve, r: usize, irreducible_only: bool, engine: &EngineConfig) -> Outcome {
    let required = falling_factorial(gamma.node_count(), r);
    if r > gamma.node_count() {
        return Err(EquivError::OrderOutOfRange { r: r as i64, max: gamma.node_count() }.into());
    }
    if required > u128::from(engine.state_budget) {
        return budget_report("markings", required, engine.state_budget, 0);
    }
    let list: Vec<(bool, Vec<NodeId>)> = severi_core::equiv::enumerate_markings(gamma, r, irreducible_only)?
        .map(|m| (m.is_irreducible(gamma), m.node_ids(gamma)))
        .collect();
    let rows = list
        .iter()
        .enumerate()
        .map(|(i, (irr, m))| Ok(vec![i.to_string(), irr.to_string(), serde_json::to_string(m)?]))
        .collect::<anyhow::Result<Vec<_>>>()?;
    let result = json!({
        "r": r,
        "irreducibleOnly": irreducible_only,
        "count": list.len(),
        "markings": list.iter().map(|(irr, m)| json!({"marking": m, "irreducible": irr})).collect::<Vec<_>>(),
    });
    Ok((Report::new("markings", result)?.with_table(&["index", "irreducible", "marking"], rows), 0))
}

fn moves(gamma: &DegenerationCurve, path: &Path, apply: Option<&Path>, include_identity: bool) -> Outcome {
    let m = read_marking(gamma, path)?;
    if let Some(mv_path) = apply {
        let doc: MoveDocument = read_json(mv_path)?;
        let mv = doc.resolve(gamma).with_context(|| format!("move in {}", mv_path.display()))?;
        let out = mv.apply(&m);
        let record = TraceRecord::new(gamma, &m, &mv, &out);
        let row = vec![serde_json::to_string(&record)?];
        let result = json!({"record": record, "irreducible": out.is_irreducible(gamma)});
        return Ok((Report::new("markings", result)?.with_table(&["record"], vec![row]), 0));
    }
    let list: Vec<Value> = enumerate_moves(gamma, &m, !include_identity)
        .into_iter()
        .map(|(mv, res)| json!({"move": mv.to_document(gamma), "result": res.node_ids(gamma)}))
        .collect();
    let rows = list
        .iter()
        .map(|v| Ok(vec![serde_json::to_string(&v["move"])?, serde_json::to_string(&v["result"])?]))
        .collect::<anyhow::Result<Vec<_>>>()?;
    let result = json!({
        "marking": m.node_ids(gamma),
        "irreducible": m.is_irreducible(gamma),
        "moveCount": list.len(),
        "moves": list,
    });
    Ok((Report::new("markings", result)?.with_table(&["move", "result"], rows), 0))
}

fn replay_cmd(gamma: &DegenerationCurve, path: &Path, chained: bool) -> Outcome {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let records = parse_trace(&text)?;
    let checked = replay_trace(gamma, &records, chained)?;
    let result = json!({"records": checked, "chained": chained, "valid": true});
    Ok((Report::new("markings", result)?, 0))
}

fn entry_row(e: &GridEntry) -> Vec<String> {
    let rep = e.report.as_ref();
    let field = |f: fn(&ClassReport) -> String| rep.map(f).unwrap_or_default();
    vec![
        e.n.to_string(),
        e.d.to_string(),
        e.k.to_string(),
        opt(&e.r),
        e.existence_window.to_string(),
        serde_json::to_value(e.status).ok().and_then(|v| v.as_str().map(str::to_owned)).unwrap_or_default(),
        field(|r| r.total_markings.to_string()),
        field(|r| r.irreducible_count.to_string()),
        field(|r| r.class_count_irreducible.to_string()),
        field(|r| r.class_count_all.to_string()),
        field(|r| r.max_frontier.to_string()),
        field(|r| r.states_visited.to_string()),
        field(|r| format!("{:.3}", r.wall_time_ms)),
        opt(&e.node_freedom),
        opt(&e.required_states),
    ]
}

const GRID_HEADER: [&str; 15] = [
    "n",
    "d",
    "k",
    "r",
    "existenceWindow",
    "status",
    "totalMarkings",
    "irreducibleCount",
    "classCountIrreducible",
    "classCountAll",
    "maxFrontier",
    "statesVisited",
    "wallTimeMs",
    "nodeFreedom",
    "requiredStates",
];

fn equiv_grid(grid: ParamGrid, spec: &str, engine: &EngineConfig) -> Outcome {
    let entries = verify_single_class(&grid, engine)?;
    let count = |s| entries.iter().filter(|e| e.status == s).count();
    let failed = count(EntryStatus::Fail);
    let freedom_failed = entries.iter().filter(|e| e.node_freedom == Some(false)).count();
    for e in entries.iter().filter(|e| e.status == EntryStatus::Skipped) {
        log::warn!(
            "skipped n={} d={} k={} r={}: {} states exceed the budget",
            e.n,
            e.d,
            e.k,
            opt(&e.r),
            opt(&e.required_states)
        );
    }
    let result = json!({
        "grid": spec,
        "summary": {
            "pass": count(EntryStatus::Pass),
            "fail": failed,
            "skipped": count(EntryStatus::Skipped),
            "vacuous": count(EntryStatus::Vacuous),
            "nodeFreedomFailures": freedom_failed,
        },
        "entries": entries,
    });
    let rows = entries.iter().map(entry_row).collect();
    let code = if failed + freedom_failed > 0 { EXIT_COUNTEREXAMPLE } else { 0 };
    Ok((Report::new("equiv", result)?.with_table(&GRID_HEADER, rows), code))
}

fn equiv_single(gamma: &DegenerationCurve, r: usize, dump: Option<&Path>, engine: &EngineConfig) -> Outcome {
    let window = existence_window(gamma);
    let partition = match compute_partition(gamma, r, engine) {
        Ok(p) => p,
        Err(EquivError::BudgetExceeded { required, budget, visited }) => {
            return budget_report("equiv", required, budget, visited)
        }
        Err(e) => return Err(e.into()),
    };
    let report = &partition.report;
    let freedom = (r >= 1 && r as i64 <= window).then(|| node_freedom_report(gamma, r)).transpose()?;
    let (status, code) = match (report.irreducible_count, report.class_count_irreducible) {
        (0, _) => (EntryStatus::Vacuous, 0),
        (_, 1) => (EntryStatus::Pass, 0),
        _ => (EntryStatus::Fail, EXIT_COUNTEREXAMPLE),
    };
    let code = if freedom.as_ref().is_some_and(|c| !c.holds) { EXIT_COUNTEREXAMPLE } else { code };
    let counterexample: Vec<Vec<NodeId>> = if status == EntryStatus::Fail {
        irreducible_representatives(&partition, gamma).into_iter().take(2).collect()
    } else {
        Vec::new()
    };
    if let Some(dir) = dump {
        dump_classes(&partition, gamma, dir)?;
    }
    let result = json!({
        "status": status,
        "existenceWindow": window,
        "report": report,
        "nodeFreedom": freedom,
        "counterexample": counterexample,
    });
    let entry = GridEntry {
        n: gamma.n(),
        d: gamma.d(),
        k: gamma.k(),
        r: Some(r),
        existence_window: window,
        status,
        report: Some(report.clone()),
        node_freedom: freedom.as_ref().map(|c| c.holds),
        counterexample: None,
        required_states: None,
    };
    Ok((Report::new("equiv", result)?.with_table(&GRID_HEADER, vec![entry_row(&entry)]), code))
}

fn irreducible_representatives(p: &Partition, gamma: &DegenerationCurve) -> Vec<Vec<NodeId>> {
    p.representatives()
        .into_iter()
        .zip(&p.class_irreducible)
        .filter(|(_, &irr)| irr)
        .map(|(m, _)| m.node_ids(gamma))
        .collect()
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct DumpIndexEntry {
    class: u32,
    irreducible: bool,
    size: usize,
    file: String,
}

/// One JSON-lines file per class, markings in canonical order, plus an index.
fn dump_classes(p: &Partition, gamma: &DegenerationCurve, dir: &Path) -> anyhow::Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let mut index = Vec::new();
    for class in 0..p.report.class_count_all as u32 {
        let file = format!("class-{class:06}.jsonl");
        let mut text = String::new();
        let mut size = 0;
        for m in p.members(class) {
            text += &serde_json::to_string(&m.node_ids(gamma))?;
            text.push('\n');
            size += 1;
        }
        fs::write(dir.join(&file), text)?;
        index.push(DumpIndexEntry { class, irreducible: p.class_irreducible[class as usize], size, file });
    }
    fs::write(dir.join("index.json"), serde_json::to_string_pretty(&index)? + "\n")?;
    Ok(())
}

fn equiv_witness(
    gamma: &DegenerationCurve,
    from: &Path,
    to: &Path,
    trace_out: Option<&Path>,
    engine: &EngineConfig,
) -> Outcome {
    let (a, b) = (read_marking(gamma, from)?, read_marking(gamma, to)?);
    let trace = match find_witness(gamma, &a, &b, engine) {
        Ok(t) => t,
        Err(EquivError::BudgetExceeded { required, budget, visited }) => {
            return budget_report("equiv", required, budget, visited)
        }
        Err(e) => return Err(e.into()),
    };
    let both_irreducible = a.is_irreducible(gamma) && b.is_irreducible(gamma);
    let code = if trace.is_none() && both_irreducible { EXIT_COUNTEREXAMPLE } else { 0 };
    if let (Some(path), Some(records)) = (trace_out, &trace) {
        fs::write(path, write_trace(records)).with_context(|| format!("writing {}", path.display()))?;
    }
    let rows = trace
        .iter()
        .flatten()
        .map(|rec| Ok(vec![serde_json::to_string(rec)?]))
        .collect::<anyhow::Result<Vec<_>>>()?;
    let result = json!({
        "from": a.node_ids(gamma),
        "to": b.node_ids(gamma),
        "equivalent": trace.is_some(),
        "steps": trace.as_ref().map(Vec::len),
        "trace": trace,
    });
    Ok((Report::new("equiv", result)?.with_table(&["record"], rows), code))
}

fn parse_polygon(path: &Path) -> anyhow::Result<LatticePolygon> {
    let value: Value = read_json(path)?;
    let Value::Array(items) = value else { bail!("{}: expected a JSON list of integer pairs", path.display()) };
    let vertices = items
        .iter()
        .enumerate()
        .map(|(i, v)| {
            serde_json::from_value::<Point>(v.clone())
                .map_err(|_| anyhow!("vertex {i}: expected an integer pair [x, y], got {v}"))
        })
        .collect::<anyhow::Result<Vec<_>>>()?;
    Ok(LatticePolygon::new(vertices)?)
}

#[derive(Deserialize)]
#[serde(untagged)]
enum RootSpec {
    Simple(String),
    WithMultiplicity { value: String, multiplicity: u32 },
}

fn parse_roots(path: &Path) -> anyhow::Result<Vec<Vec<(BigRational, u32)>>> {
    let specs: Vec<Vec<RootSpec>> = read_json(path)?;
    specs
        .into_iter()
        .enumerate()
        .map(|(edge, list)| {
            list.into_iter()
                .map(|s| {
                    let (text, m) = match s {
                        RootSpec::Simple(t) => (t, 1),
                        RootSpec::WithMultiplicity { value, multiplicity } => (value, multiplicity),
                    };
                    let value = text.parse().map_err(|_| anyhow!("edge {edge}: bad rational {text:?}"))?;
                    Ok((value, m))
                })
                .collect()
        })
        .collect()
}

fn toric(path: &Path, implicit: bool, roots: Option<&Path>, seed: u64) -> Outcome {
    let poly = parse_polygon(path)?;
    let mut report = ToricReport::new(&poly)?;
    if implicit {
        let one = BigRational::from_integer(1.into());
        let roots = match roots {
            Some(p) => parse_roots(p)?,
            None => random_generic_roots(&poly, &mut ChaCha8Rng::seed_from_u64(seed))
                .into_iter()
                .map(|l| l.into_iter().map(|c| (c, 1)).collect())
                .collect(),
        };
        let param = build_param(&poly, &roots, one.clone(), one)?;
        match implicitize(&param, &poly) {
            Ok(imp) => report = report.with_implicitization(&param, &imp),
            Err(e @ (ToricError::NotInLinearSystem | ToricError::HoldoutFailed(_))) => {
                return Err(Failure { code: EXIT_COUNTEREXAMPLE, error: e.into() })
            }
            Err(e) => return Err(Failure { code: EXIT_INPUT, error: e.into() }),
        }
        if report.generic == Some(false) {
            log::warn!("implicitization is not generic: Newton polygon differs from the input polygon");
        }
    }
    let dets = &report.determinants;
    let rows = report
        .edges
        .iter()
        .enumerate()
        .map(|(i, e)| {
            vec![
                i.to_string(),
                e.primitive.0.to_string(),
                e.primitive.1.to_string(),
                e.lattice_length.to_string(),
                dets[i].to_string(),
            ]
        })
        .collect();
    Ok((Report::new("toric", &report)?.with_table(&["edge", "a", "b", "latticeLength", "determinant"], rows), 0))
}
