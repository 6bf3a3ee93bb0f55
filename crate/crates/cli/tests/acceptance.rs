//! End-to-end acceptance run. Prints one PASS/FAIL line per criterion and
//! exits non-zero when any criterion fails.

use std::path::Path;
use std::process::Command;
use std::time::Instant;

use l1cert::certify::{
    certificate_admm, certificate_barrier, cubic_z_update, default_alpha, strictify, SupportPattern,
    ADMM_MAX_ITERS, LP_ZERO_MARGIN,
};
use l1cert::generator::{generate_nonunique, generate_unique, GeneratedInstance, GeneratorSpec};
use l1cert::linalg::{dot, norm1, norm_inf, sub};
use l1cert::oracle::{bp_face_range, oracle_unique};
use l1cert::simplex::audit;
use l1cert::solvers::{solve_bp, solve_lasso, LassoOptions, Model, ProblemInstance};
use l1cert::uniqueness::{
    corollary1_check, corollary2_check, recognize_from_dual, verify_model, Corollary1Outcome, Corollary2Outcome,
    UniquenessVerdict, VerdictStatus,
};
use l1cert::{tol, DenseMatrix, Error};
use l1cert_cli::run_with_seed_env;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde_json::Value;

type Outcome = Result<String, String>;

fn example_a() -> DenseMatrix {
    DenseMatrix::from_rows(&[[1.0, 0.0, 2.0], [0.0, 2.0, -2.0]]).unwrap()
}

fn cli(args: &[&str]) -> (i32, String) {
    let mut argv = vec!["l1cert"];
    argv.extend_from_slice(args);
    let out = run_with_seed_env(argv, None);
    (out.exit_code, out.stdout)
}

fn floats(v: &Value) -> Vec<f64> {
    v.as_array()
        .map(|a| a.iter().filter_map(Value::as_f64).collect())
        .unwrap_or_default()
}

fn write_example_files(dir: &Path) -> (String, String) {
    let a = dir.join("A.csv");
    let b = dir.join("b.csv");
    std::fs::write(&a, "1,0,2\n0,2,-2\n").unwrap();
    std::fs::write(&b, "1\n1\n").unwrap();
    (a.to_str().unwrap().into(), b.to_str().unwrap().into())
}

/// CLI commands of criterion 1; returns the raw reports.
fn example_reports(dir: &Path) -> Result<(String, String), String> {
    let (a, b) = write_example_files(dir);
    let (code, solved) = cli(&["solve", "--model", "lasso", "--A", &a, "--b", &b, "--lambda", "1"]);
    if code != 0 {
        return Err(format!("solve exited with {code}: {solved}"));
    }
    let x = floats(&serde_json::from_str::<Value>(&solved).unwrap()["x"]);
    let xp = dir.join("x.csv");
    std::fs::write(&xp, x.iter().map(|v| format!("{v:.16e}\n")).collect::<String>()).unwrap();
    let (code, checked) = cli(&["check", "--model", "lasso", "--A", &a, "--b", &b, "--lambda", "1", "--x", xp.to_str().unwrap()]);
    if code != 0 {
        return Err(format!("check exited with {code}: {checked}"));
    }
    Ok((solved, checked))
}

fn criterion1() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let start = Instant::now();
    let (solved, checked) = example_reports(dir.path())?;
    let secs = start.elapsed().as_secs_f64();
    let solved: Value = serde_json::from_str(&solved).unwrap();
    let checked: Value = serde_json::from_str(&checked).unwrap();
    let x = floats(&solved["x"]);
    let err = norm_inf(&sub(&x, &[0.0, 0.25, 0.0]));
    let j: Vec<u64> = checked["equicorrelation"]["indices"]
        .as_array()
        .map(|a| a.iter().filter_map(Value::as_u64).collect())
        .unwrap_or_default();
    let rank = checked["equicorrelation"]["rank"].as_u64();
    let detail = format!(
        "|x - (0, 0.25, 0)|_inf = {err:.1e}, status {}, J = {j:?}, rank(A_J) = {rank:?}, {secs:.3} s",
        checked["status"]
    );
    let ok = err <= 1e-6 && checked["status"] == "Unique" && j == [0, 1, 2] && rank == Some(2) && secs < 1.0;
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

struct Case {
    label: String,
    inst: ProblemInstance,
    x: Vec<f64>,
    verdict: UniquenessVerdict,
    oracle: Result<bool, Error>,
}

fn gaussian(rng: &mut ChaCha8Rng, len: usize) -> Vec<f64> {
    (0..len).map(|_| StandardNormal.sample(&mut *rng)).collect()
}

fn generated(seed: u64, nonunique: bool) -> Result<GeneratedInstance, Error> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let m = rng.random_range(2..=6);
    let n = rng.random_range((m + 1).max(3)..=10);
    let k = rng.random_range(1..=(m / 2).max(1));
    let spec = GeneratorSpec::new(m, n, k, 0.1, seed)?;
    if nonunique {
        generate_nonunique(&spec)
    } else {
        generate_unique(&spec)
    }
}

/// Integer basis pursuit with `b = A x0` for a sparse integer `x0`; ties
/// between columns make non-unique optima common.
fn integer_bp(seed: u64) -> Result<(ProblemInstance, Vec<f64>), Error> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = rng.random_range(2..=6);
    let n = rng.random_range(3..=10);
    let a: Vec<f64> = (0..m * n).map(|_| rng.random_range(-2..=2) as f64).collect();
    let a = DenseMatrix::new(m, n, a)?;
    let mut x0 = vec![0.0; n];
    for _ in 0..rng.random_range(1..=m) {
        x0[rng.random_range(0..n)] = rng.random_range(-2..=2) as f64;
    }
    let b = a.mul_vec(&x0);
    let sol = solve_bp(&a, &b)?;
    Ok((ProblemInstance::new(Model::BasisPursuit, a, b)?, sol.x))
}

/// A Lasso solution, posed for the Lasso or, with matching parameters, for
/// the two constrained models.
fn lasso_family(seed: u64, variant: u64) -> Result<(ProblemInstance, Vec<f64>), Error> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = rng.random_range(2..=6);
    let n = rng.random_range(3..=10);
    let a = DenseMatrix::new(m, n, gaussian(&mut rng, m * n))?;
    let b = gaussian(&mut rng, m);
    let lambda = rng.random_range(0.1..0.6) * norm_inf(&a.tr_mul_vec(&b));
    let sol = solve_lasso(&a, &b, lambda, &LassoOptions::default())?;
    let r = sub(&a.mul_vec(&sol.x), &b);
    let model = match variant {
        0 => Model::PenalizedLs { lambda },
        1 => Model::ResidualConstrained { sigma: 0.5 * dot(&r, &r) },
        _ => Model::L1Constrained { tau: norm1(&sol.x) },
    };
    Ok((ProblemInstance::new(model, a, b)?, sol.x))
}

const CORPUS_SIZE: u64 = 240;

fn build_corpus() -> (Vec<Case>, Vec<String>) {
    let mut cases = Vec::new();
    let mut skipped = Vec::new();
    for i in 0..CORPUS_SIZE {
        let kind = i % 6;
        let seed = 1_000 + i;
        let made: Result<(ProblemInstance, Vec<f64>), Error> = match kind {
            0 | 1 => generated(seed, kind == 1).map(|g| (g.bp_instance(), g.x_star)),
            2 => integer_bp(seed),
            _ => lasso_family(seed, kind - 3),
        };
        let label = format!("#{i} kind {kind}");
        let (inst, x) = match made {
            Ok(v) => v,
            Err(e) => {
                skipped.push(format!("{label}: {e}"));
                continue;
            }
        };
        let verdict = match verify_model(&inst, &x) {
            Ok(v) => v,
            Err(e) => {
                skipped.push(format!("{label}: verify failed: {e}"));
                continue;
            }
        };
        let oracle = oracle_unique(&inst, &x);
        cases.push(Case {
            label,
            inst,
            x,
            verdict,
            oracle,
        });
    }
    (cases, skipped)
}

fn criterion2(cases: &[Case], skipped: &[String], secs: f64) -> Outcome {
    let mut disagreements = Vec::new();
    let mut indeterminate = 0;
    for c in cases {
        let oracle = match &c.oracle {
            Ok(u) => *u,
            Err(e) => {
                disagreements.push(format!("{}: oracle failed: {e}", c.label));
                continue;
            }
        };
        match c.verdict.status {
            VerdictStatus::Indeterminate => {
                indeterminate += 1;
                match c.verdict.max_margin {
                    Some(eps) if eps.abs() < 1e-4 => {}
                    eps => disagreements.push(format!(
                        "{}: indeterminate ({:?}) with margin {eps:?}",
                        c.label, c.verdict.reason
                    )),
                }
            }
            status => {
                if (status == VerdictStatus::Unique) != oracle {
                    disagreements.push(format!("{}: verdict {status:?}, oracle unique = {oracle}", c.label));
                }
            }
        }
    }
    let unique = cases.iter().filter(|c| c.verdict.is_unique()).count();
    let rate = indeterminate as f64 / cases.len().max(1) as f64;
    let detail = format!(
        "{} instances ({unique} unique), {} disagreements, {indeterminate} indeterminate ({:.1}%), {} skipped, {secs:.1} s",
        cases.len(),
        disagreements.len(),
        100.0 * rate,
        skipped.len()
    );
    if cases.len() >= 200 && disagreements.is_empty() && rate < 0.02 && secs < 60.0 {
        Ok(detail)
    } else {
        let mut notes = disagreements;
        notes.extend(skipped.iter().cloned());
        notes.truncate(5);
        Err(format!("{detail}; {}", notes.join("; ")))
    }
}

/// `(||A_I^T y - s||_inf, max_{i not in I} |a_i^T y|)` computed column by column.
fn recheck(a: &DenseMatrix, support: &[usize], signs: &[f64], y: &[f64]) -> (f64, f64) {
    let mut eq: f64 = 0.0;
    let mut off: f64 = 0.0;
    for j in 0..a.cols() {
        let c: f64 = (0..a.rows()).map(|i| a.get(i, j) * y[i]).sum();
        match support.iter().position(|&i| i == j) {
            Some(p) => eq = eq.max((c - signs[p]).abs()),
            None => off = off.max(c.abs()),
        }
    }
    (eq, off)
}

fn criterion3(cases: &[Case]) -> Outcome {
    let mut checked = 0;
    let mut violations = Vec::new();
    for c in cases.iter().filter(|c| c.verdict.is_unique()) {
        checked += 1;
        let Some(cert) = &c.verdict.certificate else {
            violations.push(format!("{}: Unique without certificate", c.label));
            continue;
        };
        let (eq, off) = recheck(c.inst.a(), &c.verdict.support, &c.verdict.signs, &cert.y);
        if eq > 1e-8 || off > 1.0 - 1e-6 {
            violations.push(format!("{}: eq {eq:.1e}, off {off}", c.label));
        }
    }
    let detail = format!("{checked} certificates re-validated, {} violations", violations.len());
    if violations.is_empty() && checked > 0 {
        Ok(detail)
    } else {
        Err(format!("{detail}; {}", violations.join("; ")))
    }
}

fn criterion4(cases: &[Case]) -> Outcome {
    let mut strict = 0;
    let mut zero = 0;
    let mut problems = Vec::new();
    for c in cases {
        let Some(eps) = c.verdict.max_margin else { continue };
        let sp = SupportPattern::from_point(&c.x);
        let a = c.inst.a();
        if eps >= 1e-4 {
            strict += 1;
            match certificate_barrier(a, &sp, None) {
                Ok(b) if b.certificate.is_valid() => {}
                other => problems.push(format!("{}: barrier {:?}", c.label, other.map(|b| b.certificate.margin))),
            }
            match certificate_admm(a, &sp, 1.0, ADMM_MAX_ITERS) {
                Ok(r) if r.certificate.is_valid() => {}
                other => problems.push(format!("{}: admm {:?}", c.label, other.map(|r| r.certificate.margin))),
            }
        } else if eps <= LP_ZERO_MARGIN && c.verdict.status == VerdictStatus::NotUnique {
            zero += 1;
            if !matches!(certificate_barrier(a, &sp, None), Err(Error::BarrierInfeasible)) {
                problems.push(format!("{}: barrier did not report infeasible", c.label));
            }
            if !matches!(certificate_admm(a, &sp, 1.0, ADMM_MAX_ITERS), Err(Error::Diverged { .. })) {
                problems.push(format!("{}: admm did not report divergence", c.label));
            }
        }
    }
    // Cubic z-update on random (rho, v): rho log-uniform in [1e-2, 1e2],
    // v uniform in [-10, 10].
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst: f64 = 0.0;
    for _ in 0..100_000 {
        let rho = 10f64.powf(rng.random_range(-2.0..2.0));
        let v = rng.random_range(-10.0..10.0);
        let z = cubic_z_update(rho, v);
        let f = rho * z * z * z - rho * v * z * z - (2.0 + rho) * z + rho * v;
        worst = worst.max(f.abs());
    }
    let detail = format!(
        "{strict} instances with eps* >= 1e-4, {zero} with eps* = 0, {} engine mismatches, worst cubic residual {worst:.1e} over 1e5 pairs",
        problems.len()
    );
    if problems.is_empty() && worst <= 1e-10 && strict > 0 && zero > 0 {
        Ok(detail)
    } else {
        problems.truncate(5);
        Err(format!("{detail}; {}", problems.join("; ")))
    }
}

fn nonunique_instances() -> Vec<GeneratedInstance> {
    (0..)
        .filter_map(|j| generated(5_000 + j, true).ok())
        .take(20)
        .collect()
}

fn criterion5(instances: &[GeneratedInstance]) -> Outcome {
    let mut worst_ax: f64 = 0.0;
    let mut worst_l1: f64 = 0.0;
    let mut problems = Vec::new();
    for (k, g) in instances.iter().enumerate() {
        let face = match bp_face_range(&g.a, &g.b) {
            Ok(f) => f,
            Err(e) => {
                problems.push(format!("instance {k}: {e}"));
                continue;
            }
        };
        if face.is_singleton() {
            problems.push(format!("instance {k}: face is a single point"));
        }
        let points: Vec<&Vec<f64>> = face
            .lower_points
            .iter()
            .zip(&face.upper_points)
            .flat_map(|(l, u)| [l, u])
            .take(5)
            .collect();
        for (i, p) in points.iter().enumerate() {
            for q in &points[i + 1..] {
                worst_ax = worst_ax.max(norm_inf(&sub(&g.a.mul_vec(p), &g.a.mul_vec(q))));
                worst_l1 = worst_l1.max((norm1(p) - norm1(q)).abs());
            }
        }
    }
    let detail = format!(
        "{} non-unique instances x 5 points, max |Ax1 - Ax2|_inf = {worst_ax:.1e}, max | |x1|_1 - |x2|_1 | = {worst_l1:.1e}",
        instances.len()
    );
    if instances.len() == 20 && problems.is_empty() && worst_ax <= 1e-6 && worst_l1 <= 1e-6 {
        Ok(detail)
    } else {
        Err(format!("{detail}; {}", problems.join("; ")))
    }
}

fn criterion6(nonunique: &[GeneratedInstance]) -> Outcome {
    let unique: Vec<GeneratedInstance> = (0..)
        .filter_map(|j| generated(6_000 + j, false).ok())
        .take(20)
        .collect();
    let mut problems = Vec::new();
    let mut degenerate = 0;
    for (k, g) in unique.iter().enumerate() {
        let sol = match solve_bp(&g.a, &g.b) {
            Ok(s) => s,
            Err(e) => {
                problems.push(format!("unique {k}: {e}"));
                continue;
            }
        };
        let sp = SupportPattern::from_point(&sol.x);
        let corr = g.a.tr_mul_vec(&sol.y);
        let off = sp.complement(g.a.cols());
        if off.iter().any(|&i| corr[i].abs() >= 1.0 - tol::STRICT) {
            degenerate += 1;
        }
        match strictify(&g.a, &sp, &sol.y, &sol.x, default_alpha(&g.a)) {
            Ok(out) => {
                let (eq, off_max) = recheck(&g.a, sp.indices(), sp.signs(), &out.y);
                let gap = (dot(&g.b, &out.y) - dot(&g.b, &sol.y)).abs();
                let value = (dot(&g.b, &out.y) - norm1(&sol.x)).abs();
                if eq > 1e-8 || off_max > 1.0 - 1e-6 || gap > 1e-8 || value > 1e-8 {
                    problems.push(format!(
                        "unique {k}: eq {eq:.1e}, off {off_max}, b^T y moved {gap:.1e}"
                    ));
                }
            }
            Err(e) => problems.push(format!("unique {k}: {e}")),
        }
    }
    let mut refused = 0;
    for (k, g) in nonunique.iter().enumerate() {
        let Ok(sol) = solve_bp(&g.a, &g.b) else {
            problems.push(format!("non-unique {k}: solve failed"));
            continue;
        };
        let sp = SupportPattern::from_point(&g.x_star);
        match strictify(&g.a, &sp, &sol.y, &g.x_star, default_alpha(&g.a)) {
            Err(Error::StrictificationFailed { .. }) => refused += 1,
            other => problems.push(format!("non-unique {k}: {:?}", other.map(|o| o.margin))),
        }
    }
    let detail = format!(
        "{} unique instances strictified ({degenerate} from a degenerate dual), {refused}/{} non-unique refused",
        unique.len(),
        nonunique.len()
    );
    if unique.len() == 20 && problems.is_empty() && degenerate > 0 {
        Ok(detail)
    } else {
        problems.truncate(5);
        Err(format!("{detail}; {}", problems.join("; ")))
    }
}

fn criterion7() -> Outcome {
    let mut problems = Vec::new();
    let a2 = DenseMatrix::from_rows(&[[1.0, 1.0], [0.0, 1.0]]).unwrap();
    match corollary2_check(&a2, &[2.0, 0.0], 1.0, &[1.0, 0.0]) {
        Ok(Corollary2Outcome::Decided {
            status: VerdictStatus::Unique,
            rank: 2,
            ..
        }) => {}
        other => problems.push(format!("corollary 2 derived: {other:?}")),
    }
    match corollary2_check(&example_a(), &[1.0, 1.0], 1.0, &[0.0, 0.25, 0.0]) {
        Ok(Corollary2Outcome::NotApplicable { j_len: 3, i_len: 1 }) => {}
        other => problems.push(format!("corollary 2 example: {other:?}")),
    }
    let a1 = DenseMatrix::from_rows(&[[1.0, 0.0, 0.3], [0.0, 1.0, 0.4]]).unwrap();
    match corollary1_check(&a1, &[2.0, 2.0], 1.0, &[1.0, 1.0, 0.0]) {
        Ok(Corollary1Outcome::Report(r)) if r.passes && norm_inf(&sub(&r.y, &[1.0, 1.0])) <= 1e-12 => {}
        other => problems.push(format!("corollary 1: {other:?}")),
    }
    let id = DenseMatrix::identity(2);
    match recognize_from_dual(&id, &[1.0, 0.0], &[1.0, 0.0], &[1.0, 0.0]) {
        Ok(v) if v.status == VerdictStatus::Unique => {}
        other => problems.push(format!("dual recognition, identity: {other:?}")),
    }
    match recognize_from_dual(&example_a(), &[1.0, 1.0], &[1.0, 0.5, 0.0], &[1.0, 0.5]) {
        Ok(v) if v.status == VerdictStatus::Indeterminate => {}
        other => problems.push(format!("dual recognition, example: {other:?}")),
    }
    if problems.is_empty() {
        Ok("corollary 2 Unique / NotApplicable, corollary 1 passes with y = (1, 1), dual recognition Unique / Indeterminate".into())
    } else {
        Err(problems.join("; "))
    }
}

fn criterion8(audit: audit::LpAudit, cases: &[Case]) -> Outcome {
    let mut problems = Vec::new();
    if audit.max_relative_gap > 1e-8 {
        problems.push(format!("duality gap {:.1e}", audit.max_relative_gap));
    }
    if audit.max_complementarity > 1e-8 {
        problems.push(format!("complementary slackness {:.1e}", audit.max_complementarity));
    }

    // Same inputs, same bytes: in-process CLI reports, generated files,
    // library verdicts, and the binary run twice.
    let d1 = tempfile::tempdir().unwrap();
    let d2 = tempfile::tempdir().unwrap();
    match (example_reports(d1.path()), example_reports(d2.path())) {
        (Ok(r1), Ok(r2)) => {
            let strip = |s: &str, d: &Path| s.replace(d.to_str().unwrap(), "<dir>");
            if strip(&r1.0, d1.path()) != strip(&r2.0, d2.path()) || strip(&r1.1, d1.path()) != strip(&r2.1, d2.path()) {
                problems.push("example reports differ between runs".into());
            }
        }
        _ => problems.push("example reports failed".into()),
    }
    let gen = |dir: &Path| {
        let out = dir.join("g");
        let (code, report) = cli(&["generate", "--m", "5", "--n", "9", "--k", "2", "--delta", "0.1", "--seed", "11", "--out", out.to_str().unwrap()]);
        let files: Vec<String> = ["A.csv", "b.csv", "xstar.csv", "instance.json"]
            .iter()
            .map(|f| std::fs::read_to_string(out.join(f)).unwrap_or_default())
            .collect();
        (code, report.replace(dir.to_str().unwrap(), "<dir>"), files)
    };
    if gen(d1.path()) != gen(d2.path()) {
        problems.push("generate output differs between runs".into());
    }
    for c in cases.iter().take(30) {
        let again = verify_model(&c.inst, &c.x).map(|v| format!("{v:?}"));
        if again != Ok(format!("{:?}", c.verdict)) {
            problems.push(format!("{}: verdict differs on re-run", c.label));
        }
    }
    let (a, b) = write_example_files(d1.path());
    let x = d1.path().join("xbp.csv");
    std::fs::write(&x, "1\n0.5\n0\n").unwrap();
    let run_bin = || {
        Command::new(env!("CARGO_BIN_EXE_l1cert"))
            .args(["check", "--model", "bp", "--A", &a, "--b", &b, "--x", x.to_str().unwrap(), "--with-oracle"])
            .output()
            .map(|o| o.stdout)
            .unwrap_or_default()
    };
    let (o1, o2) = (run_bin(), run_bin());
    if o1.is_empty() || o1 != o2 {
        problems.push("binary output differs between runs".into());
    }

    let detail = format!(
        "{} LP solves, max relative gap {:.1e}, max complementarity {:.1e}, repeated runs bitwise identical",
        audit.solves, audit.max_relative_gap, audit.max_complementarity
    );
    if problems.is_empty() {
        Ok(detail)
    } else {
        Err(format!("{detail}; {}", problems.join("; ")))
    }
}

fn main() {
    audit::reset();
    let mut results: Vec<(u8, &str, Outcome)> = Vec::new();
    results.push((1, "worked example", criterion1()));
    let start = Instant::now();
    let (cases, skipped) = build_corpus();
    let secs = start.elapsed().as_secs_f64();
    results.push((2, "verdict vs oracle", criterion2(&cases, &skipped, secs)));
    results.push((3, "certificate soundness", criterion3(&cases)));
    results.push((4, "engine agreement", criterion4(&cases)));
    let nonunique = nonunique_instances();
    results.push((5, "objective and Ax constant on the face", criterion5(&nonunique)));
    results.push((6, "strictification", criterion6(&nonunique)));
    results.push((7, "corollary checks", criterion7()));
    let audit = audit::snapshot();
    results.push((8, "LP properties and determinism", criterion8(audit, &cases)));

    let mut failed = 0;
    for (id, name, outcome) in &results {
        match outcome {
            Ok(d) => println!("criterion {id} ({name}): PASS | {d}"),
            Err(d) => {
                failed += 1;
                println!("criterion {id} ({name}): FAIL | {d}");
            }
        }
    }
    println!("acceptance: {}/{} criteria passed", results.len() - failed, results.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
