use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use cotrans_cli::report::same_modulo_wall_time;
use cotrans_cli::{examples_dir, exit, read_spec, replay, run, ProblemSpec, ReportEnvelope};
use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_cotrans"))
}

fn example(name: &str) -> PathBuf {
    examples_dir().join(name)
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("cotrans-cli-tests-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

fn write_spec(name: &str, text: &str) -> PathBuf {
    let p = scratch(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn example_specs() -> Vec<PathBuf> {
    let mut v: Vec<_> = std::fs::read_dir(examples_dir())
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    v.sort();
    v
}

#[test]
fn counterexample_verifies_with_constant_rank_one() {
    let out = bin().args(["--spec"]).arg(example("counterexample_verify.json")).output().unwrap();
    assert_eq!(code(&out), exit::PASS, "{}", stderr(&out));
    let r: ReportEnvelope = ReportEnvelope::from_json(std::str::from_utf8(&out.stdout).unwrap()).unwrap();
    assert!(r.pass);
    assert_eq!(r.schema_version, 1);
    let rank = r.entries.iter().find(|e| e.law == "rank_constancy").unwrap();
    assert_eq!(rank.details["rank"], 1.0);
    assert_eq!(r.info["rank"], Value::from(1));
}

#[test]
fn completion_of_upper_block_is_diag_pow() {
    let spec = read_spec(&example("complete_upper.json")).unwrap();
    let r = run(&spec).unwrap().report;
    assert!(r.pass);
    let rows = r.info["z_full"].as_array().unwrap();
    assert!(!rows.is_empty());
    for row in rows {
        let h = row["h"]["int"].as_i64().unwrap();
        let value: Vec<Vec<f64>> = serde_json::from_value(row["value"].clone()).unwrap();
        let expect = [[2f64.powi(h as i32), 0.0], [0.0, 1.0]];
        for i in 0..2 {
            for j in 0..2 {
                assert!((value[i][j] - expect[i][j]).abs() <= 1e-12 * expect[i][j].abs().max(1.0), "{row}");
            }
        }
    }
}

#[test]
fn huge_step_diverges() {
    let p = write_spec(
        "diverge.json",
        r#"{"command":"evolve","ode":{"coeff":{"family":"rotation","omega":1.0},"t0":0.0,"t1":2000.0,"h":10.0}}"#,
    );
    let out = bin().arg("--spec").arg(&p).output().unwrap();
    assert_eq!(code(&out), exit::DIVERGENCE, "{}", stderr(&out));
    assert_eq!(stderr(&out).lines().count(), 1);
}

#[test]
fn spec_errors_exit_two_with_one_line() {
    let cases = [
        ("unknown_field.json", r#"{"command":"verify","group":{"kind":"Z"},"cotranslation":{"kind":"random_seq","dim":2,"seed":1},"colour":1}"#, "colour"),
        ("no_object.json", r#"{"command":"verify","group":{"kind":"Z"}}"#, "required"),
        ("two_objects.json", r#"{"command":"verify","group":{"kind":"Z"},"cotranslation":{"kind":"random_seq","dim":2,"seed":1},"partial":{"kind":"constant","p":[[1]]}}"#, "exactly one"),
        ("radius.json", r#"{"command":"verify","group":{"kind":"Z"},"cotranslation":{"kind":"random_seq","dim":2,"seed":1},"radius":0}"#, "radius"),
        ("family.json", r#"{"command":"verify","group":{"kind":"Z"},"cotranslation":{"kind":"morphism","family":"nope"}}"#, "nope"),
        ("dims.json", r#"{"command":"verify","group":{"kind":"Z"},"cotranslation":{"kind":"difference_seq","period":[[[1,0],[0,1]],[[1]]]}}"#, "dimension"),
        ("tol.json", r#"{"command":"verify","group":{"kind":"Z"},"cotranslation":{"kind":"random_seq","dim":2,"seed":1},"tolerances":{"made_up":1e-3}}"#, "made_up"),
        ("complete.json", r#"{"command":"complete","group":{"kind":"Z"},"cotranslation":{"kind":"random_seq","dim":2,"seed":1}}"#, "complete"),
        ("syntax.json", "{", "schema"),
    ];
    for (name, text, needle) in cases {
        let p = write_spec(name, text);
        let out = bin().arg("--spec").arg(&p).output().unwrap();
        let err = stderr(&out);
        assert_eq!(code(&out), exit::SPEC_ERROR, "{name}: {err}");
        assert_eq!(err.trim_end().lines().count(), 1, "{name}: {err}");
        assert!(err.to_lowercase().contains(needle), "{name}: `{err}` lacks `{needle}`");
    }
}

#[test]
fn max_dim_env_caps_dimension() {
    let out = bin().env("COTRANS_MAX_DIM", "3").arg("--spec").arg(example("random_seq_verify.json")).output().unwrap();
    assert_eq!(code(&out), exit::SPEC_ERROR, "{}", stderr(&out));
    let out = bin().env("COTRANS_MAX_DIM", "4").arg("--spec").arg(example("random_seq_verify.json")).output().unwrap();
    assert_eq!(code(&out), exit::PASS, "{}", stderr(&out));
}

#[test]
fn law_failures_exit_one() {
    for name in ["alternating_projector.json", "relations_z2_shear.json"] {
        let out = bin().arg("--spec").arg(example(name)).output().unwrap();
        assert_eq!(code(&out), exit::LAW_FAILURE, "{name}: {}", stderr(&out));
        let r = ReportEnvelope::from_json(std::str::from_utf8(&out.stdout).unwrap()).unwrap();
        assert!(!r.pass);
    }
    let spec = read_spec(&example("relations_z2_shear.json")).unwrap();
    let r = run(&spec).unwrap().report;
    let rel = r.entries.iter().find(|e| e.law.starts_with("relations")).unwrap();
    assert!(rel.max_residual > 0.5);
}

#[test]
fn tolerance_override_changes_verdict() {
    let out = bin()
        .arg("--spec")
        .arg(example("alternating_projector.json"))
        .args(["--tol", "projector_rank=1"])
        .output()
        .unwrap();
    assert_eq!(code(&out), exit::PASS, "{}", stderr(&out));
    let out = bin().arg("--spec").arg(example("counterexample_verify.json")).args(["--tol", "bogus"]).output().unwrap();
    assert_eq!(code(&out), exit::SPEC_ERROR);
}

#[test]
fn out_and_csv_files() {
    let report = scratch("rot.json");
    let csv = scratch("rot.csv");
    let out = bin()
        .arg("--spec")
        .arg(example("evolve_rotation.json"))
        .arg("--out")
        .arg(&report)
        .arg("--csv")
        .arg(&csv)
        .output()
        .unwrap();
    assert_eq!(code(&out), exit::PASS, "{}", stderr(&out));
    assert!(out.stdout.is_empty());
    let r = ReportEnvelope::from_json(&std::fs::read_to_string(&report).unwrap()).unwrap();
    assert!(r.pass);
    let text = std::fs::read_to_string(&csv).unwrap();
    let mut lines = text.lines();
    let header = lines.next().unwrap();
    assert!(header.starts_with('t'));
    let ncols = header.split(',').count();
    assert_eq!(ncols, 5);
    for l in lines {
        assert_eq!(l.split(',').count(), ncols);
    }

    let out = bin().arg("--spec").arg(example("counterexample_verify.json")).arg("--csv").arg(&csv).output().unwrap();
    assert_eq!(code(&out), exit::SPEC_ERROR);
}

#[test]
fn replay_detects_tampering() {
    let path = example("random_seq_verify.json");
    let spec = read_spec(&path).unwrap();
    let report = run(&spec).unwrap().report;
    assert!(replay(&report, &spec).unwrap().iter().all(|l| l.ok));

    let mut tampered = report.clone();
    let e = tampered.entries.iter_mut().find(|e| e.law == "cocycle").unwrap();
    e.max_residual += 1e-9;
    assert!(!replay(&tampered, &spec).unwrap().iter().all(|l| l.ok));

    let p = scratch("tampered.json");
    std::fs::write(&p, tampered.to_json()).unwrap();
    let out = bin().arg("--spec").arg(&path).arg("--replay").arg(&p).output().unwrap();
    assert_eq!(code(&out), exit::LAW_FAILURE);
    assert!(String::from_utf8_lossy(&out.stdout).trim_end().ends_with("replay false"));
}

#[test]
fn replay_under_a_different_seed() {
    let path = example("counterexample_verify.json");
    let spec = read_spec(&path).unwrap();
    let report = run(&spec).unwrap().report;
    let mut other = spec.clone();
    other.seed = 99;
    assert!(replay(&report, &other).unwrap().iter().all(|l| l.ok));

    let p = scratch("fresh.json");
    std::fs::write(&p, report.to_json()).unwrap();
    let out = bin().arg("--spec").arg(&path).args(["--seed", "99", "--replay"]).arg(&p).output().unwrap();
    assert_eq!(code(&out), exit::PASS, "{}", String::from_utf8_lossy(&out.stdout));
}

#[test]
fn replay_rejects_version_and_command_mismatch() {
    let spec = read_spec(&example("counterexample_verify.json")).unwrap();
    let report = run(&spec).unwrap().report;
    let mut old = report.clone();
    old.tool_version = "0.0.0".into();
    assert!(replay(&old, &spec).is_err());
    let other = read_spec(&example("complete_upper.json")).unwrap();
    assert!(replay(&report, &other).is_err());
}

#[test]
fn list_laws_and_schema() {
    let out = bin().arg("--list-laws").output().unwrap();
    assert_eq!(code(&out), exit::PASS);
    let text = String::from_utf8(out.stdout).unwrap();
    for (id, _, _) in cotrans_core::laws::ALL {
        assert!(text.lines().any(|l| l.split_whitespace().next() == Some(id)), "{id}");
    }
    let out = bin().arg("--print-schema").output().unwrap();
    let schema: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(schema["properties"]["command"]["enum"].as_array().unwrap().len(), 5);
}

#[test]
fn missing_spec_is_usage_error() {
    let out = bin().output().unwrap();
    assert_eq!(code(&out), exit::SPEC_ERROR);
    let out = bin().arg("--spec").arg(scratch("does_not_exist.json")).output().unwrap();
    assert_eq!(code(&out), exit::SPEC_ERROR);
}

// every tagged variant in the spec format appears in some shipped example
#[test]
fn examples_cover_every_constructor() {
    let mut kinds = std::collections::BTreeSet::new();
    fn walk(v: &Value, out: &mut std::collections::BTreeSet<String>) {
        match v {
            Value::Object(m) => {
                for tag in ["kind", "family", "command"] {
                    if let Some(Value::String(s)) = m.get(tag) {
                        out.insert(format!("{tag}:{s}"));
                    }
                }
                m.values().for_each(|x| walk(x, out));
            }
            Value::Array(a) => a.iter().for_each(|x| walk(x, out)),
            _ => {}
        }
    }
    for p in example_specs() {
        walk(&serde_json::from_str(&std::fs::read_to_string(&p).unwrap()).unwrap(), &mut kinds);
    }
    let expected = [
        "command:verify",
        "command:complete",
        "command:evolve",
        "command:skew-roundtrip",
        "command:generator",
        "kind:Z",
        "kind:Zk",
        "kind:free",
        "kind:finite",
        "kind:grid",
        "kind:difference_seq",
        "kind:random_seq",
        "kind:morphism",
        "kind:generator_maps",
        "kind:explicit_table",
        "kind:evolution",
        "kind:shifted",
        "kind:conjugated",
        "kind:from_hull",
        "kind:restrict",
        "kind:random",
        "kind:constant",
        "kind:sum",
        "kind:periodic",
        "kind:shear",
        "kind:diag_pow",
        "kind:conjugated_constant",
        "kind:alternating",
        "kind:solution_family",
        "kind:of",
        "family:diag_pow",
        "family:matrix_pow",
        "family:scalar_exp",
        "family:constant",
        "family:rotation",
        "family:table",
        "family:diag_poly",
        "family:sinusoidal",
        "family:shifted",
    ];
    let missing: Vec<_> = expected.iter().filter(|k| !kinds.contains(**k)).collect();
    assert!(missing.is_empty(), "{missing:?}");
}

#[test]
fn examples_round_trip_and_validate() {
    let specs = example_specs();
    assert!(specs.len() >= 20);
    for p in &specs {
        let spec = read_spec(p).unwrap_or_else(|e| panic!("{}: {e}", p.display()));
        let again: ProblemSpec = ProblemSpec::from_json(&serde_json::to_string(&spec).unwrap()).unwrap();
        assert_eq!(spec, again, "{}", p.display());
    }
}

#[test]
fn examples_are_deterministic_through_the_binary() {
    for name in ["complete_random.json", "generator_periodic.json", "finite_s3.json"] {
        let run_once = || bin().arg("--spec").arg(example(name)).output().unwrap();
        let (a, b) = (run_once(), run_once());
        assert_eq!(code(&a), code(&b));
        let ra = ReportEnvelope::from_json(std::str::from_utf8(&a.stdout).unwrap()).unwrap();
        let rb = ReportEnvelope::from_json(std::str::from_utf8(&b.stdout).unwrap()).unwrap();
        assert!(same_modulo_wall_time(&ra, &rb), "{name}");
    }
}

#[test]
fn radius_override() {
    let path: &Path = &example("counterexample_verify.json");
    let out = bin().arg("--spec").arg(path).args(["--radius", "2"]).output().unwrap();
    let r = ReportEnvelope::from_json(std::str::from_utf8(&out.stdout).unwrap()).unwrap();
    assert_eq!(r.radius, 2);
    assert_eq!(r.info["window_size"], Value::from(5));
}
