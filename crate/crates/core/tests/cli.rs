use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::Value;

use safemargin::annotation::serialize_annotations;
use safemargin::synth;
use safemargin::AnnotationRecord;

fn bin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_safemargin"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn stdout_json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!(
            "stdout is not JSON ({e}): {}\nstderr: {}",
            String::from_utf8_lossy(&out.stdout),
            String::from_utf8_lossy(&out.stderr)
        )
    })
}

fn write_records(dir: &Path, name: &str, records: &[AnnotationRecord]) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, serialize_annotations(records).unwrap()).unwrap();
    path
}

fn three_records() -> Vec<AnnotationRecord> {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    vec![
        synth::horizontal_band("band", 64, 48, 24.0, 8.0, 4.0, 60.0).unwrap(),
        synth::u_shape("u", 64, 64).unwrap(),
        synth::random_annotation(&mut rng, "rand", 48, 40),
    ]
}

fn pngs(dir: &Path) -> Vec<String> {
    let mut names: Vec<String> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .filter(|n| n.ends_with(".png"))
        .collect();
    names.sort();
    names
}

#[test]
fn generate_writes_one_png_per_record_and_a_sidecar() {
    let dir = tempfile::tempdir().unwrap();
    let ann = write_records(dir.path(), "a.json", &three_records());
    let out = dir.path().join("maps");
    let run = bin(&["generate", "--annotations", s(&ann), "--out-dir", s(&out)]);
    assert!(
        run.status.success(),
        "{}",
        String::from_utf8_lossy(&run.stderr)
    );
    assert_eq!(pngs(&out), ["band.png", "rand.png", "u.png"]);
    let sidecar: Value =
        serde_json::from_slice(&fs::read(out.join("generation_params.json")).unwrap()).unwrap();
    assert_eq!(sidecar["params"]["formula"], "corrected");
    assert_eq!(fs::read_dir(&out).unwrap().count(), 4);

    let report = stdout_json(&run);
    assert_eq!(report["aggregate"]["written"], 3);
    assert_eq!(report["per_frame"].as_array().unwrap().len(), 3);

    // Regeneration is byte-identical, independent of thread count.
    let again = dir.path().join("again");
    let run = bin(&[
        "--threads",
        "1",
        "generate",
        "--annotations",
        s(&ann),
        "--out-dir",
        s(&again),
    ]);
    assert!(run.status.success());
    for name in pngs(&out) {
        assert_eq!(
            fs::read(out.join(&name)).unwrap(),
            fs::read(again.join(&name)).unwrap(),
            "{name}"
        );
    }
}

#[test]
fn generate_into_unwritable_location_fails() {
    let dir = tempfile::tempdir().unwrap();
    let ann = write_records(dir.path(), "a.json", &three_records());
    let blocker = dir.path().join("file");
    fs::write(&blocker, b"not a directory").unwrap();
    let run = bin(&[
        "generate",
        "--annotations",
        s(&ann),
        "--out-dir",
        s(&blocker.join("maps")),
    ]);
    assert!(!run.status.success());
    assert!(String::from_utf8_lossy(&run.stderr).contains("error"));
}

#[test]
fn generate_with_invalid_record_lists_it_and_cleans_up() {
    let dir = tempfile::tempdir().unwrap();
    let mut records: Vec<Value> =
        serde_json::from_slice(&serialize_annotations(&three_records()).unwrap()).unwrap();
    let mut bad = records[0].clone();
    bad["frame_id"] = "broken".into();
    bad["trajectory"] = serde_json::json!([[1.0, 1.0]]);
    records.push(bad);
    let ann = dir.path().join("a.json");
    fs::write(&ann, serde_json::to_vec(&records).unwrap()).unwrap();

    let out = dir.path().join("maps");
    let run = bin(&["generate", "--annotations", s(&ann), "--out-dir", s(&out)]);
    assert!(!run.status.success());
    assert!(String::from_utf8_lossy(&run.stderr).contains("broken"));
    assert!(pngs(&out).is_empty());
    assert!(!out.join("generation_params.json").exists());

    let kept = dir.path().join("kept");
    let run = bin(&[
        "generate",
        "--annotations",
        s(&ann),
        "--out-dir",
        s(&kept),
        "--keep-partial",
    ]);
    assert!(!run.status.success());
    assert_eq!(pngs(&kept).len(), 3);
    assert_eq!(stdout_json(&run)["aggregate"]["partial"], true);
}

#[test]
fn parameters_come_from_file_and_flags() {
    let dir = tempfile::tempdir().unwrap();
    let ann = write_records(dir.path(), "a.json", &three_records());
    let params = dir.path().join("p.json");
    fs::write(
        &params,
        br#"{"distance_threshold": 3.0, "threshold_mode": "relative-to-calibration", "formula": "corrected"}"#,
    )
    .unwrap();
    let out = dir.path().join("maps");
    let run = bin(&[
        "generate",
        "--annotations",
        s(&ann),
        "--out-dir",
        s(&out),
        "--params",
        s(&params),
        "--formula",
        "printed",
    ]);
    assert!(run.status.success());
    let sidecar: Value =
        serde_json::from_slice(&fs::read(out.join("generation_params.json")).unwrap()).unwrap();
    assert_eq!(
        sidecar["params"]["threshold_mode"],
        "relative-to-calibration"
    );
    assert_eq!(sidecar["params"]["distance_threshold"], 3.0);
    assert_eq!(sidecar["params"]["formula"], "printed");

    let run = bin(&[
        "generate",
        "--annotations",
        s(&ann),
        "--out-dir",
        s(&out),
        "--distance-threshold",
        "-1",
    ]);
    assert!(!run.status.success());
}

#[test]
fn score_map_against_itself_is_zero() {
    let dir = tempfile::tempdir().unwrap();
    let ann = write_records(dir.path(), "a.json", &three_records());
    let maps = dir.path().join("maps");
    assert!(
        bin(&["generate", "--annotations", s(&ann), "--out-dir", s(&maps)])
            .status
            .success()
    );
    let report = dir.path().join("r.json");
    let run = bin(&[
        "--report",
        s(&report),
        "score-map",
        "--pred-dir",
        s(&maps),
        "--gt-dir",
        s(&maps),
    ]);
    assert!(run.status.success());
    let r: Value = serde_json::from_slice(&fs::read(&report).unwrap()).unwrap();
    assert_eq!(r["aggregate"]["pooled"]["mae"], 0.0);
    assert_eq!(r["aggregate"]["per_image_mean"]["weighted_mse"], 0.0);
    assert_eq!(r["aggregate"]["frames"], 3);
    assert_eq!(r["report_version"], 1);
    let ids: Vec<&str> = r["per_frame"]
        .as_array()
        .unwrap()
        .iter()
        .map(|f| f["frame_id"].as_str().unwrap())
        .collect();
    assert_eq!(ids, ["band", "rand", "u"]);
}

#[test]
fn score_map_missing_counterparts() {
    let dir = tempfile::tempdir().unwrap();
    let recs = three_records();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    let ann_a = write_records(dir.path(), "a.json", &recs[..2]);
    let ann_b = write_records(dir.path(), "b.json", &recs[1..]);
    assert!(
        bin(&["generate", "--annotations", s(&ann_a), "--out-dir", s(&a)])
            .status
            .success()
    );
    assert!(
        bin(&["generate", "--annotations", s(&ann_b), "--out-dir", s(&b)])
            .status
            .success()
    );

    // Without --strict the unmatched frames are listed and excluded.
    let run = bin(&["score-map", "--pred-dir", s(&a), "--gt-dir", s(&b)]);
    assert!(run.status.success());
    let r = stdout_json(&run);
    assert_eq!(r["aggregate"]["frames"], 1);
    assert_eq!(r["warnings"].as_array().unwrap().len(), 2);

    let run = bin(&[
        "--strict",
        "score-map",
        "--pred-dir",
        s(&a),
        "--gt-dir",
        s(&b),
    ]);
    assert!(!run.status.success());

    // Empty intersection.
    let empty = dir.path().join("empty");
    fs::create_dir(&empty).unwrap();
    let run = bin(&[
        "--strict",
        "score-map",
        "--pred-dir",
        s(&empty),
        "--gt-dir",
        s(&b),
    ]);
    assert!(!run.status.success());
}

#[test]
fn band_baseline_matches_band_ground_truth() {
    let dir = tempfile::tempdir().unwrap();
    let recs = vec![
        synth::horizontal_band("h", 256, 128, 64.0, 20.0, 0.0, 255.5).unwrap(),
        synth::vertical_band("v", 128, 256, 64.0, 20.0, 0.0, 255.5).unwrap(),
    ];
    let ann = write_records(dir.path(), "a.json", &recs);
    let (gt, pred) = (dir.path().join("gt"), dir.path().join("pred"));
    assert!(
        bin(&["generate", "--annotations", s(&ann), "--out-dir", s(&gt)])
            .status
            .success()
    );
    assert!(bin(&[
        "predict-band",
        "--annotations",
        s(&ann),
        "--out-dir",
        s(&pred),
        "--half-width",
        "20"
    ])
    .status
    .success());
    let run = bin(&["score-map", "--pred-dir", s(&pred), "--gt-dir", s(&gt)]);
    assert!(run.status.success());
    let mae = stdout_json(&run)["aggregate"]["pooled"]["mae"]
        .as_f64()
        .unwrap();
    assert!(mae < 2.0, "MAE {mae}");
}

#[test]
fn score_traj_through_files() {
    let dir = tempfile::tempdir().unwrap();
    let gt = dir.path().join("gt.json");
    let pred = dir.path().join("pred.json");
    fs::write(
        &gt,
        br#"{"a": [[0, 0], [10, 0]], "b": [[0, 0], [0, 5], [0, 10]]}"#,
    )
    .unwrap();
    fs::write(
        &pred,
        br#"{"a": [[3, 4], [13, 4]], "b": [[0, 0], [0, 10]]}"#,
    )
    .unwrap();
    let run = bin(&["score-traj", "--pred", s(&pred), "--gt", s(&gt)]);
    assert!(
        run.status.success(),
        "{}",
        String::from_utf8_lossy(&run.stderr)
    );
    let r = stdout_json(&run);
    let a = &r["per_frame"][0];
    assert_eq!(a["frame_id"], "a");
    assert_eq!(a["points"], 6);
    for key in ["ade", "fde", "fd"] {
        assert!((a[key].as_f64().unwrap() - 5.0).abs() < 1e-12, "{key}");
    }
    let b = &r["per_frame"][1];
    assert_eq!(b["ade"], 0.0);
    assert!((r["aggregate"]["per_image_mean"]["ade"].as_f64().unwrap() - 2.5).abs() < 1e-12);

    fs::write(
        &pred,
        br#"{"a": [[3, 4], [13, 4]], "c": [[0, 0], [0, 10]]}"#,
    )
    .unwrap();
    assert!(
        !bin(&["--strict", "score-traj", "--pred", s(&pred), "--gt", s(&gt)])
            .status
            .success()
    );
    let run = bin(&[
        "score-traj",
        "--pred",
        s(&pred),
        "--gt",
        s(&gt),
        "--resample-n",
        "3",
    ]);
    assert!(run.status.success());
    assert_eq!(stdout_json(&run)["aggregate"]["frames"], 1);
}

fn write_image(dir: &Path, name: &str, w: usize, h: usize) {
    fs::create_dir_all(dir).unwrap();
    let img = safemargin::corrupt::test_pattern(w, h);
    fs::write(dir.join(name), img.to_png().unwrap()).unwrap();
}

#[test]
fn corrupt_single_kind_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let images = dir.path().join("img");
    write_image(&images, "frame7.png", 40, 30);
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for out in [&a, &b] {
        let run = bin(&[
            "--seed",
            "11",
            "corrupt",
            "--image-dir",
            s(&images),
            "--out-dir",
            s(out),
            "--kind",
            "gaussian-noise",
            "--severity",
            "3",
        ]);
        assert!(
            run.status.success(),
            "{}",
            String::from_utf8_lossy(&run.stderr)
        );
    }
    assert_eq!(pngs(&a), ["frame7.gaussian-noise.s3.png"]);
    let name = "frame7.gaussian-noise.s3.png";
    assert_eq!(
        fs::read(a.join(name)).unwrap(),
        fs::read(b.join(name)).unwrap()
    );

    // A different root seed gives a different stream.
    let c = dir.path().join("c");
    let run = bin(&[
        "--seed",
        "12",
        "corrupt",
        "--image-dir",
        s(&images),
        "--out-dir",
        s(&c),
        "--kind",
        "gaussian-noise",
        "--severity",
        "3",
    ]);
    assert!(run.status.success());
    assert_ne!(
        fs::read(a.join(name)).unwrap(),
        fs::read(c.join(name)).unwrap()
    );
}

#[test]
fn corrupt_rejects_bad_severity_and_kind() {
    let dir = tempfile::tempdir().unwrap();
    let images = dir.path().join("img");
    write_image(&images, "x.png", 8, 8);
    let out = dir.path().join("out");
    let run = bin(&[
        "corrupt",
        "--image-dir",
        s(&images),
        "--out-dir",
        s(&out),
        "--kind",
        "fog",
        "--severity",
        "6",
    ]);
    assert!(!run.status.success());
    assert!(String::from_utf8_lossy(&run.stderr).contains("severity"));
    let run = bin(&[
        "corrupt",
        "--image-dir",
        s(&images),
        "--out-dir",
        s(&out),
        "--kind",
        "snow",
    ]);
    assert!(!run.status.success());
}

#[test]
fn corrupt_all_kinds_all_severities() {
    let dir = tempfile::tempdir().unwrap();
    let images = dir.path().join("img");
    write_image(&images, "p.png", 24, 20);
    write_image(&images, "q.png", 16, 16);
    let out = dir.path().join("out");
    let run = bin(&[
        "corrupt",
        "--image-dir",
        s(&images),
        "--out-dir",
        s(&out),
        "--kind",
        "all",
    ]);
    assert!(
        run.status.success(),
        "{}",
        String::from_utf8_lossy(&run.stderr)
    );
    let names = pngs(&out);
    assert_eq!(names.len(), 2 * 13 * 5);
    assert!(names.contains(&"q.zoom-blur.s5.png".to_string()));
    let r = stdout_json(&run);
    assert_eq!(r["aggregate"]["outputs"], 130);
    assert_eq!(r["aggregate"]["table_version"], 1);
}

#[test]
fn compare_oracle_passes_and_detects_mismatch() {
    let dir = tempfile::tempdir().unwrap();
    let ann = write_records(dir.path(), "a.json", &three_records());
    let run = bin(&["compare-oracle", "--annotations", s(&ann)]);
    assert!(
        run.status.success(),
        "{}",
        String::from_utf8_lossy(&run.stderr)
    );
    let r = stdout_json(&run);
    assert_eq!(r["aggregate"]["pass"], true);
    assert_eq!(r["aggregate"]["max_abs_diff"], 0.0);

    let run = bin(&[
        "compare-oracle",
        "--annotations",
        s(&ann),
        "--oracle-formula",
        "printed",
    ]);
    assert!(!run.status.success());
    let r = stdout_json(&run);
    assert_eq!(r["aggregate"]["pass"], false);
    assert!(r["aggregate"]["max_abs_diff"].as_f64().unwrap() > 0.0);

    let empty = dir.path().join("empty.json");
    fs::write(&empty, b"[]").unwrap();
    let run = bin(&["compare-oracle", "--annotations", s(&empty)]);
    assert!(run.status.success());
    assert!(String::from_utf8_lossy(&run.stderr).contains("vacuous"));
}

#[test]
fn validate_reports_each_invalid_record() {
    let dir = tempfile::tempdir().unwrap();
    let ann = dir.path().join("a.json");
    fs::write(
        &ann,
        br#"[
  {"frame_id": "ok", "width": 10, "height": 10,
   "trajectory": [[2, 5], [8, 5]], "safety_margin": [[1, 1], [9, 1], [9, 9], [1, 9]]},
  {"frame_id": "outside", "width": 10, "height": 10,
   "trajectory": [[0.5, 5], [8, 5]], "safety_margin": [[1, 1], [9, 1], [9, 9], [1, 9]]},
  {"frame_id": "ok", "width": 10, "height": 10,
   "trajectory": [[2, 5], [8, 5]], "safety_margin": [[1, 1], [9, 1], [9, 9], [1, 9]]}
]"#,
    )
    .unwrap();
    let run = bin(&["validate", "--annotations", s(&ann)]);
    assert!(!run.status.success());
    let r = stdout_json(&run);
    assert_eq!(r["aggregate"]["valid"], 1);
    assert_eq!(r["aggregate"]["invalid"], 2);
    let text = serde_json::to_string(&r["per_frame"]).unwrap();
    assert!(text.contains("outside") && text.contains("duplicate"));

    fs::write(&ann, b"[{").unwrap();
    let run = bin(&["validate", "--annotations", s(&ann)]);
    assert!(!run.status.success());
    assert!(String::from_utf8_lossy(&run.stderr).contains("parse error"));
}

#[test]
fn resample_and_extrapolate_files() {
    let dir = tempfile::tempdir().unwrap();
    let ann = write_records(dir.path(), "a.json", &three_records());
    let out = dir.path().join("t.json");
    let run = bin(&[
        "resample",
        "--input",
        s(&ann),
        "--n",
        "6",
        "--output",
        s(&out),
    ]);
    assert!(
        run.status.success(),
        "{}",
        String::from_utf8_lossy(&run.stderr)
    );
    let t: Value = serde_json::from_slice(&fs::read(&out).unwrap()).unwrap();
    assert_eq!(
        t["band"],
        serde_json::json!([
            [4.0, 24.0],
            [15.2, 24.0],
            [26.4, 24.0],
            [37.6, 24.0],
            [48.8, 24.0],
            [60.0, 24.0]
        ])
    );
    assert_eq!(t["u"].as_array().unwrap().len(), 6);

    let hist = dir.path().join("h.json");
    fs::write(&hist, br#"{"a": [[0, 0], [1, 0]], "b": [[0, 0], [0, 2]]}"#).unwrap();
    let run = bin(&["extrapolate", "--input", s(&hist), "--n", "2"]);
    assert!(run.status.success());
    let e: Value = serde_json::from_slice(&run.stdout).unwrap();
    assert_eq!(e["a"], serde_json::json!([[2.0, 0.0], [3.0, 0.0]]));
    assert_eq!(e["b"], serde_json::json!([[0.0, 4.0], [0.0, 6.0]]));

    let run = bin(&["resample", "--input", s(&hist), "--n", "1"]);
    assert!(!run.status.success());
}

#[test]
fn reports_are_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let ann = write_records(dir.path(), "a.json", &three_records());
    let maps = dir.path().join("maps");
    assert!(
        bin(&["generate", "--annotations", s(&ann), "--out-dir", s(&maps)])
            .status
            .success()
    );
    let a = bin(&[
        "score-map",
        "--pred-dir",
        s(&maps),
        "--gt-dir",
        s(&maps),
        "--w-out",
        "3",
    ]);
    let b = bin(&[
        "--threads",
        "1",
        "score-map",
        "--pred-dir",
        s(&maps),
        "--gt-dir",
        s(&maps),
        "--w-out",
        "3",
    ]);
    let strip = |o: &Output| {
        let mut v = stdout_json(o);
        v["config"]["global"]["threads"] = Value::Null;
        v
    };
    assert_eq!(strip(&a), strip(&b));
    assert_eq!(
        stdout_json(&a)["config"]["command"]["score-map"]["w_out"],
        3.0
    );
}
