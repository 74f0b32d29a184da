mod common;

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use foley_core::audio::load_wav;
use foley_core::mix::MixingPlan;
use foley_core::script::{FoleyScript, SearchTrace};

fn foley(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_foley"))
        .args(args)
        .output()
        .expect("spawn foley")
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn unknown_subcommand_prints_usage() {
    let out = foley(&["frobnicate"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("Usage"));
}

#[test]
fn module_error_is_json_on_stderr() {
    let dir = tempfile::tempdir().unwrap();
    let out = foley(&[
        "upmix",
        p(&dir.path().join("missing.wav")),
        p(&dir.path().join("o.wav")),
    ]);
    assert_eq!(out.status.code(), Some(1));
    let err: serde_json::Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(err["error"]["kind"], "io");
    assert!(err["error"]["message"].as_str().unwrap().contains("missing.wav"));
}

#[test]
fn upmix_writes_six_channels() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("in.wav");
    let clip = common::stereo_burst(1, 0.3, 0.5, 0.05, 1.0);
    foley_core::audio::save_wav(
        &clip,
        &input,
        foley_core::audio::WavEncoding::Float32,
        &mut Default::default(),
    )
    .unwrap();
    let output = dir.path().join("out.wav");
    let out = foley(&["upmix", p(&input), p(&output)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let six = load_wav(&output).unwrap();
    assert_eq!(six.channels(), 6);
    assert_eq!(six.frames(), clip.frames());
}

#[test]
fn render_then_annotate() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("mono.wav");
    common::write_mono(&input, common::burst(4, 0.5, 0.3, 0.4, 0.05, 1.5));
    let traj = dir.path().join("traj.json");
    fs::write(
        &traj,
        r#"{"fps": 25, "ppm": 100, "cues": [{"frame": 0, "x": 640, "width": 640, "height": 360, "depth_m": 1.0}]}"#,
    )
    .unwrap();
    let stereo = dir.path().join("stereo.wav");
    let out = foley(&[
        "render",
        "--input",
        p(&input),
        "--trajectory",
        p(&traj),
        "--preset",
        "dry",
        "--out",
        p(&stereo),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let clip = load_wav(&stereo).unwrap();
    assert_eq!(clip.channels(), 2);
    let az = foley_core::metrics::gcc_phat_azimuth(&clip, 0.17).unwrap();
    assert!(az > 100.0, "{az}");

    let ann = dir.path().join("ann.json");
    let out = foley(&["annotate", "--input", p(&input), "--fps", "25", "--out", p(&ann)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(&ann).unwrap()).unwrap();
    assert_eq!(v["schema_version"], 1);
    assert!(!v["events"].as_array().unwrap().is_empty());
}

#[test]
fn pipeline_without_seed_fails() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = common::write_fixture_scene(dir.path());
    let mut v: serde_json::Value = serde_json::from_str(&fs::read_to_string(&cfg).unwrap()).unwrap();
    v.as_object_mut().unwrap().remove("seed");
    fs::write(&cfg, v.to_string()).unwrap();
    let out = foley(&["pipeline", "--config", p(&cfg)]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("seed"));
    assert!(!dir.path().join("out").exists());
}

#[test]
fn pipeline_outputs_and_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = common::write_fixture_scene(dir.path());
    let a = dir.path().join("run_a");
    let b = dir.path().join("run_b");
    for o in [&a, &b] {
        let out = foley(&["pipeline", "--config", p(&cfg), "--out", p(o)]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
    let mut names: Vec<String> = fs::read_dir(&a)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    names.sort();
    assert_eq!(
        names,
        [
            "conditioning.json",
            "executed_plan.json",
            "mix.wav",
            "mix51.wav",
            "plan.json",
            "script.json",
            "trace.json"
        ]
    );
    for n in &names {
        assert_eq!(
            fs::read(a.join(n)).unwrap(),
            fs::read(b.join(n)).unwrap(),
            "{n} differs"
        );
    }

    let mix = load_wav(a.join("mix.wav")).unwrap();
    assert_eq!(mix.channels(), 2);
    assert!((4.0..6.0).contains(&mix.duration_s()), "{}", mix.duration_s());
    assert_eq!(load_wav(a.join("mix51.wav")).unwrap().channels(), 6);
    let script: FoleyScript = serde_json::from_str(&fs::read_to_string(a.join("script.json")).unwrap()).unwrap();
    assert_eq!(script.events.len(), 3);
    let plan: MixingPlan = serde_json::from_str(&fs::read_to_string(a.join("plan.json")).unwrap()).unwrap();
    plan.validate(&script).unwrap();
    let trace: SearchTrace = serde_json::from_str(&fs::read_to_string(a.join("trace.json")).unwrap()).unwrap();
    assert!(!trace.nodes.is_empty());
}

#[test]
fn script_subcommand_writes_script_and_trace() {
    let dir = tempfile::tempdir().unwrap();
    let ctx = dir.path().join("ctx.json");
    fs::write(
        &ctx,
        r#"{"duration_s": 5, "scene_tone": "calm", "events": [
            {"description": "cup set down", "start_s": 1, "end_s": 1.4},
            {"description": "room tone", "start_s": 0, "end_s": 5}]}"#,
    )
    .unwrap();
    let (script, trace) = (dir.path().join("s.json"), dir.path().join("t.json"));
    let out = foley(&[
        "script",
        "--context",
        p(&ctx),
        "--seed",
        "3",
        "--trace",
        p(&trace),
        "--out",
        p(&script),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let s: FoleyScript = serde_json::from_str(&fs::read_to_string(&script).unwrap()).unwrap();
    assert_eq!(s.events.len(), 2);
    assert!(trace.exists());
}

#[test]
fn dataset_then_eval_against_itself() {
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("src");
    fs::create_dir_all(&src).unwrap();
    common::write_mono(&src.join("glass_clink.wav"), common::burst(5, 0.5, 0.1, 0.3, 0.05, 1.0));
    common::write_mono(&src.join("knock.wav"), common::burst(6, 0.5, 0.1, 0.2, 0.05, 1.0));
    let ds = dir.path().join("ds");
    let out = foley(&["dataset", "--sources", p(&src), "--out", p(&ds), "--seed", "11", "--qa"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let manifest = ds.join("manifest.jsonl");
    assert_eq!(fs::read_to_string(&manifest).unwrap().lines().count(), 2);

    let report = dir.path().join("report.json");
    let out = foley(&[
        "eval",
        "--pred",
        p(&ds),
        "--truth",
        p(&manifest),
        "--report",
        p(&report),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let r: serde_json::Value = serde_json::from_str(&fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(r["items"].as_array().unwrap().len(), 2);
    assert!(r["loudness_error_lu"].as_f64().unwrap().abs() < 1e-9);
    assert!(r["lsd_db"].as_f64().unwrap() < 1e-6);
}
