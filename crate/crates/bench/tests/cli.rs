#[path = "../../core/tests/common/mod.rs"]
mod common;

use std::path::Path;
use std::process::{Command, Output};

use hsi_tensor::hsi::csv::{parse_matrix, parse_trace, write_tensor};
use hsi_tensor::hsi::{load_cube, read_header};
use hsi_tensor_bench::report::{ComparisonReport, RankEstimate};

fn tdbench(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tdbench"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn dir_arg(dir: &Path) -> &str {
    dir.to_str().unwrap()
}

fn report(dir: &Path) -> ComparisonReport {
    serde_json::from_str(&std::fs::read_to_string(dir.join("report.json")).unwrap()).unwrap()
}

#[test]
fn decompose_noiseless_synthetic_cube() {
    let out = tempfile::tempdir().unwrap();
    let o = tdbench(&["decompose", "--synth", "P=3", "--method", "cpd", "--rank", "3", "--out", dir_arg(out.path())]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let r = report(out.path());
    let rec = &r.methods[0];
    assert!(rec.relative_error.unwrap() < 1e-6);
    assert!(rec.wall_time_s.is_some());
    let trace = parse_trace(&std::fs::read_to_string(out.path().join("trace_cpd.csv")).unwrap()).unwrap();
    assert_eq!(trace.len(), rec.iterations);
    let f3 = parse_matrix(&std::fs::read_to_string(out.path().join("cpd_factor3.csv")).unwrap()).unwrap();
    assert_eq!(f3.shape(), (32, 3));
}

#[test]
fn exit_codes() {
    let out = tempfile::tempdir().unwrap();
    let d = dir_arg(out.path());
    let code = |args: &[&str]| tdbench(args).status.code().unwrap();
    assert_eq!(code(&["decompose", "--synth", "P=3", "--method", "parafac", "--out", d]), 2);
    assert_eq!(code(&["decompose", "--method", "cpd", "--rank", "2", "--out", d]), 2);
    assert_eq!(code(&["decompose", "--tensor", "/dev/null", "--method", "cpd", "--out", d]), 3);
    assert_eq!(code(&["decompose", "--synth", "P=3", "--method", "cpd", "--rank", "600", "--out", d]), 2);
    assert_eq!(code(&["compare", "--synth", "P=3", "--methods", "cpd", "--out", d]), 2);
    assert_eq!(code(&["decompose", "--cube", "/nonexistent/cube.json", "--method", "cpd", "--rank", "1", "--out", d]), 3);

    let header = out.path().join("bad.json");
    std::fs::write(&header, r#"{"width":2,"height":2,"bands":3,"dtype":"f64","interleave":"bsq"}"#).unwrap();
    std::fs::write(out.path().join("bad.bin"), vec![0u8; 2 * 2 * 2 * 8]).unwrap();
    assert_eq!(code(&["decompose", "--cube", header.to_str().unwrap(), "--method", "cpd", "--rank", "1", "--out", d]), 3);
}

#[test]
fn synth_then_decompose_from_cube_files() {
    let out = tempfile::tempdir().unwrap();
    let d = dir_arg(out.path());
    assert!(tdbench(&["synth", "--synth", "P=2,dims=10x8x12,seed=3", "--out", d]).status.success());
    let header = read_header(&out.path().join("cube.json")).unwrap();
    assert_eq!((header.width, header.height, header.bands), (10, 8, 12));
    let cube = load_cube(&out.path().join("cube.json"), &out.path().join("cube.bin")).unwrap();
    assert_eq!(cube.dims(), [8, 10, 12]);
    let endmembers = parse_matrix(&std::fs::read_to_string(out.path().join("endmembers.csv")).unwrap()).unwrap();
    assert_eq!(endmembers.shape(), (12, 2));

    let cube_path = out.path().join("cube.json");
    let o = tdbench(&["decompose", "--cube", cube_path.to_str().unwrap(), "--method", "lmlra", "--mlranks", "2,1,2", "--out", d]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(report(out.path()).methods[0].relative_error.unwrap() < 1e-10);
    assert!(out.path().join("lmlra_core.csv").exists());
}

#[test]
fn compare_with_matched_ranks_on_exact_cube() {
    let out = tempfile::tempdir().unwrap();
    let o = tdbench(&[
        "compare", "--synth", "P=3", "--methods", "cpd,btd-ll1,lmlra,btd", "--rank", "3",
        "--blocks", "1,1,1", "--mlranks", "3,3,3", "--out", dir_arg(out.path()),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let r = report(out.path());
    assert_eq!(r.methods.len(), 4);
    for rec in &r.methods {
        assert!(rec.relative_error.unwrap() < 1e-6, "{rec:?}");
        assert!(rec.converged, "{rec:?}");
    }
    assert!(r.best_method_is_consistent());
    assert_eq!(r.traces.len(), 4);
    assert!(out.path().join("btd_core3.csv").exists());
}

#[test]
fn config_file_and_overrides() {
    let out = tempfile::tempdir().unwrap();
    let config = out.path().join("run.json");
    std::fs::write(
        &config,
        serde_json::json!({
            "synth": "P=2,dims=8x8x10",
            "method": "cpd",
            "rank": 1,
            "max-iters": 7,
            "deterministic": true,
            "out": out.path().join("from-config"),
        })
        .to_string(),
    )
    .unwrap();
    let c = config.to_str().unwrap();
    assert!(tdbench(&["decompose", "--config", c]).status.success());
    let r = report(&out.path().join("from-config"));
    assert_eq!(r.methods[0].parameter_count, Some(1 + 8 + 8 + 10));
    assert!(r.methods[0].iterations <= 7);
    assert!(r.methods[0].wall_time_s.is_none());

    let o = tdbench(&["decompose", "--config", c, "--rank", "2", "--method", "cpd-compressed"]);
    assert!(o.status.success());
    let r = report(&out.path().join("from-config"));
    assert_eq!(r.methods[0].method, "cpd-compressed");
    assert_eq!(r.methods[0].parameter_count, Some(2 * (1 + 8 + 8 + 10)));

    std::fs::write(&config, r#"{"iterations": 3}"#).unwrap();
    assert_eq!(tdbench(&["decompose", "--config", c]).status.code(), Some(2));
}

#[test]
fn rank_estimate_on_exact_rank3_tensor() {
    let out = tempfile::tempdir().unwrap();
    let truth = common::random_kruskal(&mut common::rng(4), &[9, 8, 7], 3);
    let tensor = out.path().join("t.csv");
    write_tensor(&truth.full().unwrap(), &tensor).unwrap();
    let d = dir_arg(out.path());
    let t = tensor.to_str().unwrap();

    assert!(tdbench(&["rank-estimate", "--tensor", t, "--ranks", "1..5", "--out", d]).status.success());
    let est: RankEstimate =
        serde_json::from_str(&std::fs::read_to_string(out.path().join("rank_estimate.json")).unwrap()).unwrap();
    assert_eq!(est.entries.iter().map(|e| e.rank).collect::<Vec<_>>(), [1, 2, 3, 4, 5]);
    assert_eq!(est.suggested_rank, Some(3));

    assert!(tdbench(&["rank-estimate", "--tensor", t, "--ranks", "1", "--out", d]).status.success());
    let est: RankEstimate =
        serde_json::from_str(&std::fs::read_to_string(out.path().join("rank_estimate.json")).unwrap()).unwrap();
    assert_eq!(est.entries.len(), 1);
    assert_eq!(est.entries[0].score, 100.0);
    assert_eq!(est.suggested_rank, Some(1));
}
