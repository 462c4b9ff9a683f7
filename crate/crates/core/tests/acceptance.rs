//! Acceptance criteria, one line of output each. Runs without the libtest
//! harness so the summary is always printed; exits nonzero if any fails.

use std::time::{Duration, Instant};

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use severi_core::equiv::*;
use severi_core::gamma::{build_gamma, DegenerationCurve};
use severi_core::lattice::*;
use severi_core::markings::{all_move_instances, Marking};
use severi_core::toric::*;

const SEED: u64 = 0x5e7e_1a77_1ce5;

const LIMIT_LATTICE: Duration = Duration::from_secs(1);
const LIMIT_GAMMA: Duration = Duration::from_secs(1);
const LIMIT_MOVES: Duration = Duration::from_secs(30);
const LIMIT_SINGLE_CLASS: Duration = Duration::from_secs(600);
const LIMIT_N0: Duration = Duration::from_secs(300);
const LIMIT_FREEDOM: Duration = Duration::from_secs(120);
const LIMIT_EXAMPLE: Duration = Duration::from_secs(1);
const LIMIT_IMPLICIT: Duration = Duration::from_secs(120);

const MOVE_CASES_PER_INSTANCE: usize = 10_000;
const MIN_COMPLETED_POINTS: usize = 12;
const IMPLICIT_TRIALS: usize = 100;
const IMPLICIT_MIN_EQUAL: usize = 95;

fn gamma(n: u32, d: u32, k: u32) -> DegenerationCurve {
    build_gamma(SurfaceParam::new(n), d.into(), k.into()).unwrap()
}

/// `(n, d, k)` with `0 ≤ n ≤ 4`, `1 ≤ d ≤ 6`, `0 ≤ k ≤ 6`.
fn small_grid() -> impl Iterator<Item = (u32, u32, u32)> {
    (0..=4).flat_map(|n| (1..=6).flat_map(move |d| (0..=6).map(move |k| (n, d, k))))
}

fn lattice_identities() -> (bool, String) {
    let mut checked = 0;
    for (n, d, k) in small_grid() {
        let sp = SurfaceParam::new(n);
        let c = DivisorClass::new(sp, d.into(), k.into());
        let pa = smooth_genus(&c).unwrap();
        if adjunction_genus(&c).unwrap() != pa {
            return (false, format!("adjunction genus differs at n={n} d={d} k={k}"));
        }
        for g in 0..=pa {
            let num = severi_numerology(sp, d.into(), k.into(), g).unwrap();
            let (n, d, k) = (i64::from(n), i64::from(d), i64::from(k));
            if num.dim_lin_sys - num.delta != n * d + 2 * k + 2 * d + g - 1 {
                return (false, format!("dimension identity fails at n={n} d={d} k={k} g={g}"));
            }
            if num.delta_prime - num.r_max != d + k - 1 {
                return (false, format!("δ'−rMax fails at n={n} d={d} k={k} g={g}"));
            }
            checked += 1;
        }
    }
    (true, format!("{checked} (n,d,k,g) points"))
}

fn gamma_node_counts() -> (bool, String) {
    for (n, d, k) in small_grid() {
        let expected = d * k + n * d * (d - 1) / 2;
        let got = gamma(n, d, k).node_count() as u32;
        if got != expected {
            return (false, format!("n={n} d={d} k={k}: {got} nodes, expected {expected}"));
        }
    }
    (true, "245 instances".into())
}

fn move_invariants() -> (bool, String) {
    let instances = [(1, 2, 2), (2, 2, 1), (1, 3, 1), (0, 2, 3), (0, 3, 2)];
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut total = 0;
    for (n, d, k) in instances {
        let g = gamma(n, d, k);
        let moves = all_move_instances(&g);
        let mut nodes: Vec<usize> = (0..g.node_count()).collect();
        for _ in 0..MOVE_CASES_PER_INSTANCE {
            nodes.shuffle(&mut rng);
            let r = rng.random_range(0..=nodes.len());
            let m = Marking::from_indices(&g, &nodes[..r]).unwrap();
            let mv = moves[rng.random_range(0..moves.len())];
            let out = mv.apply(&m);
            let fail = |what: &str| (false, format!("{what}: n={n} d={d} k={k} move {mv} on {:?}", m.indices()));
            if Marking::new(&g, &out.node_ids(&g)).ok().as_ref() != Some(&out) || out.len() != m.len() {
                return fail("invalid result");
            }
            if out.is_irreducible(&g) != m.is_irreducible(&g) {
                return fail("status changed");
            }
            let inverted = mv.apply(&out) == m
                || moves.iter().any(|w| w.family() == mv.family() && w.apply(&out) == m);
            if !inverted {
                return fail("no same-family inverse");
            }
            total += 1;
        }
    }
    (true, format!("{total} randomized cases on 5 instances"))
}

fn summarize(entries: &[GridEntry], min_completed: usize) -> (bool, String) {
    let count = |s| entries.iter().filter(|e| e.status == s).count();
    let (pass, fail, skipped, vacuous) =
        (count(EntryStatus::Pass), count(EntryStatus::Fail), count(EntryStatus::Skipped), count(EntryStatus::Vacuous));
    let completed = pass + fail;
    let mut detail = format!("{pass} single-class, {fail} multi-class, {skipped} skipped, {vacuous} vacuous");
    for e in entries.iter().filter(|e| e.status == EntryStatus::Skipped) {
        detail += &format!("; skipped n={} d={} k={} r={} ({} states)", e.n, e.d, e.k, e.r.unwrap(), e.required_states.as_deref().unwrap_or("?"));
    }
    for e in entries.iter().filter(|e| e.status == EntryStatus::Fail) {
        detail += &format!("; FAIL n={} d={} k={} r={} counterexample {:?}", e.n, e.d, e.k, e.r.unwrap(), e.counterexample);
    }
    (fail == 0 && completed >= min_completed, detail)
}

fn class_grid(spec: &str) -> Vec<GridEntry> {
    verify_single_class(&spec.parse().unwrap(), &EngineConfig::default()).unwrap()
}

fn node_freedom_all() -> (bool, String) {
    let mut checked = 0;
    for (n, d, k) in ["n=1..2,d=2..3,k=0..2", "n=0,d=2..3,k=2..3"]
        .iter()
        .flat_map(|s| s.parse::<ParamGrid>().unwrap().points().collect::<Vec<_>>())
    {
        let g = gamma(n, d, k);
        for r in 1..=existence_window(&g).max(0) as usize {
            let rep = node_freedom_report(&g, r).unwrap();
            if !rep.holds {
                return (false, format!("n={n} d={d} k={k} r={r}: {rep:?}"));
            }
            checked += 1;
        }
    }
    (true, format!("{checked} (n,d,k,r) points"))
}

fn maximal_markings() -> (bool, String) {
    let mut checked = 0;
    for (n, d, k) in small_grid() {
        let g = gamma(n, d, k);
        if g.node_count() > 12 {
            continue;
        }
        let window = existence_window(&g);
        let expected = if window < 0 {
            BigUint::default()
        } else {
            g.spanning_tree_count() * (1..=window as u64).map(BigUint::from).product::<BigUint>()
        };
        let got = maximal_marking_count(&g).unwrap();
        if got != expected {
            return (false, format!("n={n} d={d} k={k}: {got} vs {expected}"));
        }
        checked += 1;
    }
    (true, format!("{checked} instances with δ' ≤ 12"))
}

fn closing_example() -> (bool, String) {
    let tri = LatticePolygon::new(vec![(0, 0), (4, 0), (0, 2)]).unwrap();
    let trap = LatticePolygon::new(vec![(0, 0), (4, 0), (2, 1), (0, 1)]).unwrap();
    let dim_lin = severi_numerology(SurfaceParam::new(2), 1, 2, 0).unwrap().dim_lin_sys;
    let tri_dim = tri.rational_moduli_dim().unwrap();
    let ok = !tri.is_smooth() && tri_dim == 7 && trap.is_smooth() && dim_lin == 7;
    (
        ok,
        format!(
            "triangle smooth={} moduliDim={tri_dim}; trapezoid smooth={}; dimLinSys(2,1,2)={dim_lin}",
            tri.is_smooth(),
            trap.is_smooth()
        ),
    )
}

fn implicitization() -> (bool, String) {
    let polys = [
        ("unit square", LatticePolygon::new(vec![(0, 0), (1, 0), (1, 1), (0, 1)]).unwrap()),
        ("triangle", LatticePolygon::new(vec![(0, 0), (4, 0), (0, 2)]).unwrap()),
    ];
    let one = BigRational::from_integer(BigInt::from(1));
    let mut ok = true;
    let mut parts = Vec::new();
    for (name, poly) in &polys {
        let mut rng = ChaCha8Rng::seed_from_u64(SEED);
        let (mut equal, mut contained, mut errors) = (0, 0, 0);
        for _ in 0..IMPLICIT_TRIALS {
            let roots = random_generic_roots(poly, &mut rng);
            let alpha = BigRational::new(rng.random_range(1i64..50).into(), rng.random_range(1i64..9).into());
            let param = build_generic_param(poly, &roots, alpha, one.clone()).unwrap();
            // holdout verification failure surfaces as an error
            match implicitize(&param, poly) {
                Ok(imp) => {
                    equal += usize::from(imp.equals_polygon);
                    contained += usize::from(imp.contained);
                }
                Err(_) => errors += 1,
            }
        }
        ok &= equal >= IMPLICIT_MIN_EQUAL && contained == IMPLICIT_TRIALS && errors == 0;
        parts.push(format!("{name}: {equal}/{IMPLICIT_TRIALS} equal, {contained} contained, {errors} errors"));
    }
    (ok, parts.join("; "))
}

type Criterion = (&'static str, Duration, Box<dyn Fn() -> (bool, String)>);

fn main() {
    let criteria: Vec<Criterion> = vec![
        ("lattice identities", LIMIT_LATTICE, Box::new(lattice_identities)),
        ("Γ node count", LIMIT_GAMMA, Box::new(gamma_node_counts)),
        ("move invariants", LIMIT_MOVES, Box::new(move_invariants)),
        (
            "single class, n>0",
            LIMIT_SINGLE_CLASS,
            Box::new(|| summarize(&class_grid("n=1..2,d=2..3,k=0..2"), MIN_COMPLETED_POINTS)),
        ),
        ("single class, n=0", LIMIT_N0, Box::new(|| summarize(&class_grid("n=0,d=2..3,k=2..3"), 1))),
        ("every node free", LIMIT_FREEDOM, Box::new(node_freedom_all)),
        ("maximal markings", Duration::MAX, Box::new(maximal_markings)),
        ("closing example", LIMIT_EXAMPLE, Box::new(closing_example)),
        ("implicitization", LIMIT_IMPLICIT, Box::new(implicitization)),
    ];
    let mut failed = 0;
    for (i, (name, limit, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let (ok, detail) = run();
        let elapsed = start.elapsed();
        let in_time = elapsed <= *limit;
        let verdict = if ok && in_time { "PASS" } else { "FAIL" };
        failed += usize::from(verdict == "FAIL");
        let budget = if *limit == Duration::MAX { String::new() } else { format!(" (limit {:?})", limit) };
        let late = if in_time { "" } else { " over time limit;" };
        println!("criterion {}: {verdict} [{name}] {:.2?}{budget};{late} {detail}", i + 1, elapsed);
    }
    if failed > 0 {
        eprintln!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
