use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use kaplan_core::descriptor::format::{encode, read_descriptor};
use kaplan_core::io::{read_cloud, write_cloud};
use kaplan_core::{KaplanDescriptor, Point3, PointCloud, UnitVector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use tempfile::TempDir;

fn kaplan(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_kaplan")).args(args).env_remove("KAPLAN_THREADS").output().unwrap()
}

#[track_caller]
fn ok(args: &[&str]) -> Output {
    let out = kaplan(args);
    assert!(out.status.success(), "kaplan {args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
    out
}

#[track_caller]
fn exit_code(args: &[&str]) -> i32 {
    kaplan(args).status.code().unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn sphere(n: usize, seed: u64) -> PointCloud {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut pts, mut ns) = (Vec::new(), Vec::new());
    while pts.len() < n {
        let v = Point3::new(StandardNormal.sample(&mut rng), StandardNormal.sample(&mut rng), StandardNormal.sample(&mut rng));
        let Some(u) = UnitVector3::new(v) else { continue };
        pts.push(*u * 0.5);
        ns.push(u);
    }
    PointCloud::with_normals(pts, ns).unwrap()
}

fn noisy_plane(n: usize, sigma: f64, seed: u64) -> PointCloud {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, sigma).unwrap();
    let pts = (0..n)
        .map(|_| Point3::new(rng.random_range(-0.5..0.5), rng.random_range(-0.5..0.5), noise.sample(&mut rng)))
        .collect();
    PointCloud::with_normals(pts, vec![UnitVector3::z_axis(); n]).unwrap()
}

fn write(dir: &Path, name: &str, cloud: &PointCloud) -> PathBuf {
    let path = dir.join(name);
    write_cloud(&path, cloud).unwrap();
    path
}

fn read(path: &Path) -> PointCloud {
    read_cloud(path).unwrap()
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn mean_abs_z(c: &PointCloud) -> f64 {
    c.points().iter().map(|p| p.z.abs()).sum::<f64>() / c.len() as f64
}

/// Complete sphere, and the holed split written by `gen-holes`.
fn holed_sphere(dir: &Path) -> (PathBuf, PathBuf, PathBuf) {
    let complete = write(dir, "sphere.ply", &sphere(3000, 5));
    let holes = dir.join("holes");
    ok(&["gen-holes", "--input", s(&complete), "--output-dir", s(&holes), "--fraction", "0.15", "--seed", "3"]);
    (complete, holes.join("incomplete.ply"), holes.join("missing.ply"))
}

#[test]
fn gen_holes_writes_the_split_and_levels() {
    let dir = TempDir::new().unwrap();
    let input = write(dir.path(), "in.ply", &sphere(10_000, 1));
    let out = dir.path().join("out");
    ok(&["gen-holes", "--input", s(&input), "--output-dir", s(&out), "--fraction", "0.10", "--seed", "7"]);
    assert_eq!(read(&out.join("incomplete.ply")).len(), 9000);
    assert_eq!(read(&out.join("missing.ply")).len(), 1000);
    for (l, ratio) in [0.25, 0.5, 1.0].into_iter().enumerate() {
        let level = out.join(format!("level_{l}"));
        assert_eq!(read(&level.join("incomplete.ply")).len(), (9000.0 * ratio) as usize);
        assert_eq!(read(&level.join("missing.ply")).len(), (1000.0 * ratio) as usize);
        assert_eq!(read(&level.join("complete.ply")).len(), (10_000.0 * ratio) as usize);
    }
    let m = json(&out.join("manifest.json"));
    assert_eq!(m["command"], "gen-holes");
    assert_eq!(m["seeds"]["seed"], 7);
    assert_eq!(m["config"]["fraction"], 0.1);
    assert_eq!(m["config"]["ratios"], serde_json::json!([0.25, 0.5, 1.0]));
    assert_eq!(m["results"]["holes"][0]["removed"], 1000);
    assert!(m["results"]["holes"][0]["center_index"].as_u64().unwrap() < 10_000);
}

#[test]
fn gen_holes_is_reproducible_under_a_seed() {
    let dir = TempDir::new().unwrap();
    let input = write(dir.path(), "in.ply", &sphere(2000, 2));
    let run = |name: &str, seed: &str| {
        let out = dir.path().join(name);
        ok(&["gen-holes", "--input", s(&input), "--output-dir", s(&out), "--seed", seed, "--holes", "2"]);
        ["incomplete.ply", "missing.ply", "level_0/complete.ply"].map(|f| std::fs::read(out.join(f)).unwrap())
    };
    assert_eq!(run("a", "11"), run("b", "11"));
    assert_ne!(run("a", "11"), run("c", "12"));
}

#[test]
fn gen_holes_rejects_bad_arguments() {
    let dir = TempDir::new().unwrap();
    let input = write(dir.path(), "in.ply", &sphere(100, 2));
    let out = dir.path().join("out");
    assert_eq!(exit_code(&["gen-holes", "--input", s(&input), "--output-dir", s(&out), "--fraction", "1.5"]), 2);
    assert_eq!(exit_code(&["gen-holes", "--input", s(&input), "--output-dir", s(&out), "--ratios", "0.5,0.25,1"]), 2);
    assert_eq!(exit_code(&["gen-holes", "--input", "/nonexistent.ply", "--output-dir", s(&out)]), 2);
    assert_eq!(exit_code(&["gen-holes", "--output-dir", s(&out)]), 2);
}

#[test]
fn identity_completion_keeps_the_input() {
    let dir = TempDir::new().unwrap();
    let input = write(dir.path(), "in.ply", &sphere(1500, 3));
    let output = dir.path().join("out.ply");
    ok(&["complete", "--input", s(&input), "--output", s(&output), "--backend", "identity"]);
    assert_eq!(std::fs::read(&output).unwrap(), std::fs::read(&input).unwrap());
    let m = json(&dir.path().join("out.manifest.json"));
    assert_eq!(m["command"], "complete");
    assert_eq!(m["results"]["output_points"], 1500);
    assert_eq!(m["results"]["levels"].as_array().unwrap().len(), 3);
    assert!(m["timings"].as_array().unwrap().iter().any(|t| t["stage"] == "complete"));
}

#[test]
fn oracle_completion_reports_hole_scores() {
    let dir = TempDir::new().unwrap();
    let (complete, incomplete, missing) = holed_sphere(dir.path());
    let output = dir.path().join("completed.ply");
    let backend = format!("gt-oracle:{}", s(&complete));
    ok(&["complete", "--input", s(&incomplete), "--output", s(&output), "--backend", &backend, "--missing", s(&missing)]);
    let m = json(&dir.path().join("completed.manifest.json"));
    let hole_f1 = m["results"]["hole_only"]["f1"].as_f64().unwrap();
    assert!(hole_f1 > 0.0, "hole-only F1 {hole_f1}");
    assert!(m["results"]["output_points"].as_u64().unwrap() > m["results"]["input_points"].as_u64().unwrap());
    assert_eq!(m["results"]["hole_only"]["region"], "hole_only");
}

#[test]
fn completion_does_not_depend_on_threads_and_follows_the_seed() {
    let dir = TempDir::new().unwrap();
    let (complete, incomplete, _) = holed_sphere(dir.path());
    let backend = format!("gt-oracle:{}", s(&complete));
    let run = |name: &str, extra: &[&str], env_threads: Option<&str>| {
        let output = dir.path().join(name);
        let mut args = vec!["complete", "--input", s(&incomplete), "--output", s(&output), "--backend", &backend];
        args.extend_from_slice(extra);
        let mut cmd = Command::new(env!("CARGO_BIN_EXE_kaplan"));
        cmd.args(&args).env_remove("KAPLAN_THREADS");
        if let Some(t) = env_threads {
            cmd.env("KAPLAN_THREADS", t);
        }
        let out = cmd.output().unwrap();
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        std::fs::read(output).unwrap()
    };
    let one = run("t1.ply", &["--threads", "1", "--seed", "4"], None);
    assert_eq!(one, run("t4.ply", &["--threads", "4", "--seed", "4"], None));
    assert_eq!(one, run("env.ply", &["--seed", "4"], Some("3")));
    assert_ne!(one, run("other.ply", &["--seed", "5"], None));
}

#[test]
fn completion_config_errors_exit_with_2() {
    let dir = TempDir::new().unwrap();
    let input = write(dir.path(), "in.ply", &sphere(200, 3));
    let output = dir.path().join("out.ply");
    let base = ["complete", "--input", s(&input), "--output", s(&output)];
    let with = |extra: &[&str]| -> Vec<String> { base.iter().chain(extra.iter()).map(|a| a.to_string()).collect() };
    let exit_code = |args: Vec<String>| exit_code(&args.iter().map(String::as_str).collect::<Vec<_>>());
    assert_eq!(exit_code(with(&["--config", "/nonexistent/config.toml"])), 2);
    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "[[levels]]\nnum_query_points = 4\n[levels.kaplan]\nresolution = 20\n").unwrap();
    assert_eq!(exit_code(with(&["--config", s(&bad)])), 2);
    std::fs::write(&bad, "unknown_key = 1\n").unwrap();
    assert_eq!(exit_code(with(&["--config", s(&bad)])), 2);
    assert_eq!(exit_code(with(&["--backend", "magic"])), 2);
    assert_eq!(exit_code(with(&["--backend", "gt-oracle:/nonexistent.ply"])), 2);
    assert_eq!(exit_code(with(&["--threads", "0"])), 2);
}

#[test]
fn completion_reads_json_and_toml_configs() {
    let dir = TempDir::new().unwrap();
    let (complete, incomplete, _) = holed_sphere(dir.path());
    let backend = format!("gt-oracle:{}", s(&complete));
    let toml_cfg = dir.path().join("c.toml");
    std::fs::write(
        &toml_cfg,
        "rng_seed = 9\n[[levels]]\nnum_query_points = 12\nbox_scale = 0.6\n[levels.kaplan]\nresolution = 21\n",
    )
    .unwrap();
    let json_cfg = dir.path().join("c.json");
    std::fs::write(&json_cfg, r#"{"rng_seed": 9, "levels": [{"num_query_points": 12, "box_scale": 0.6, "kaplan": {"resolution": 21}}]}"#).unwrap();
    let mut outputs = Vec::new();
    for (name, cfg) in [("a.ply", &toml_cfg), ("b.ply", &json_cfg)] {
        let output = dir.path().join(name);
        ok(&["complete", "--input", s(&incomplete), "--output", s(&output), "--backend", &backend, "--config", s(cfg)]);
        let m = json(&output.with_extension("manifest.json"));
        assert_eq!(m["config"]["levels"][0]["kaplan"]["resolution"], 21);
        assert_eq!(m["seeds"]["rng_seed"], 9);
        assert_eq!(m["results"]["levels"][0]["queries"], 12);
        outputs.push(std::fs::read(output).unwrap());
    }
    assert_eq!(outputs[0], outputs[1]);
}

#[cfg(unix)]
#[test]
fn external_copy_backend_matches_identity() {
    let dir = TempDir::new().unwrap();
    let input = write(dir.path(), "in.ply", &sphere(800, 8));
    let (a, b) = (dir.path().join("a.ply"), dir.path().join("b.ply"));
    let cfg = dir.path().join("c.toml");
    std::fs::write(&cfg, "[[levels]]\nnum_query_points = 3\n[levels.kaplan]\nresolution = 11\n").unwrap();
    let io = dir.path().join("io");
    ok(&["complete", "--input", s(&input), "--output", s(&a), "--config", s(&cfg)]);
    ok(&["complete", "--input", s(&input), "--output", s(&b), "--config", s(&cfg), "--backend", "external:cp", "--backend-io-dir", s(&io)]);
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    assert_eq!(std::fs::read_dir(&io).unwrap().count(), 0, "exchange files are cleaned up");
    // A backend that fails is a runtime error.
    assert_eq!(exit_code(&["complete", "--input", s(&input), "--output", s(&b), "--config", s(&cfg), "--backend", "external:false"]), 3);
}

#[test]
fn descriptors_export_round_trips() {
    let dir = TempDir::new().unwrap();
    let cloud = sphere(2000, 4);
    let input = write(dir.path(), "in.ply", &cloud);
    let out = dir.path().join("desc");
    let cfg = dir.path().join("c.toml");
    std::fs::write(&cfg, "resolution = 15\nside_length = 0.3\nnum_planes = 9\n").unwrap();
    ok(&["descriptors", "--input", s(&input), "--out-dir", s(&out), "--count", "10", "--config", s(&cfg), "--complete", s(&input)]);
    let mut inputs: Vec<_> = std::fs::read_dir(&out)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.to_str().unwrap().ends_with(".kpln") && !p.to_str().unwrap().ends_with(".gt.kpln"))
        .collect();
    inputs.sort();
    assert_eq!(inputs.len(), 10);
    for path in &inputs {
        let bytes = std::fs::read(path).unwrap();
        let d: KaplanDescriptor = read_descriptor(path).unwrap();
        assert_eq!((d.num_planes(), d.resolution()), (9, 15));
        assert_eq!(encode(&d), bytes, "{} is not byte-exact", path.display());
        // The complete cloud is the input, so the target equals the input descriptor.
        let gt_path = path.with_extension("gt.kpln");
        assert_eq!(std::fs::read(gt_path).unwrap(), bytes);
    }
    let m = json(&out.join("manifest.json"));
    assert_eq!(m["results"]["descriptors"].as_array().unwrap().len(), 10);
}

#[test]
fn descriptors_are_centred_on_listed_queries() {
    let dir = TempDir::new().unwrap();
    let input = write(dir.path(), "in.ply", &sphere(1000, 6));
    let listed = [Point3::new(0.5, 0.0, 0.0), Point3::new(0.0, -0.5, 0.0), Point3::new(0.1, 0.2, 0.3)];
    let queries = dir.path().join("q.xyz");
    std::fs::write(&queries, listed.iter().map(|p| format!("{} {} {}\n", p.x, p.y, p.z)).collect::<String>()).unwrap();
    let out = dir.path().join("desc");
    ok(&["descriptors", "--input", s(&input), "--out-dir", s(&out), "--queries", s(&queries)]);
    for (i, q) in listed.iter().enumerate() {
        let d: KaplanDescriptor = read_descriptor(&out.join(format!("query_{i:05}.kpln"))).unwrap();
        assert_eq!(d.query, *q);
        for p in &d.planes {
            assert_eq!(p.frame.origin, *q);
        }
    }
}

#[test]
fn descriptors_reject_even_resolution() {
    let dir = TempDir::new().unwrap();
    let input = write(dir.path(), "in.ply", &sphere(100, 6));
    let cfg = dir.path().join("c.toml");
    std::fs::write(&cfg, "resolution = 16\n").unwrap();
    let out = dir.path().join("desc");
    assert_eq!(exit_code(&["descriptors", "--input", s(&input), "--out-dir", s(&out), "--count", "2", "--config", s(&cfg)]), 2);
    assert_eq!(exit_code(&["descriptors", "--input", s(&input), "--out-dir", s(&out)]), 2);
}

#[test]
fn identity_denoise_is_byte_identical() {
    let dir = TempDir::new().unwrap();
    let input = write(dir.path(), "in.ply", &noisy_plane(400, 0.01, 1));
    let output = dir.path().join("out.ply");
    ok(&["denoise", "--input", s(&input), "--output", s(&output)]);
    assert_eq!(std::fs::read(&output).unwrap(), std::fs::read(&input).unwrap());
    assert_eq!(json(&dir.path().join("out.manifest.json"))["results"]["moved_points"], 0);
}

#[test]
fn oracle_denoise_flattens_a_noisy_plane() {
    let dir = TempDir::new().unwrap();
    let noisy = noisy_plane(3000, 0.01, 2);
    let mut clean = noisy.clone().into_parts().0;
    for p in &mut clean {
        p.z = 0.0;
    }
    let input = write(dir.path(), "noisy.ply", &noisy);
    let clean = write(dir.path(), "clean.ply", &PointCloud::with_normals(clean, vec![UnitVector3::z_axis(); 3000]).unwrap());
    let cfg = dir.path().join("c.toml");
    std::fs::write(&cfg, "side_length = 0.1\nresolution = 15\n").unwrap();
    let output = dir.path().join("out.ply");
    let backend = format!("gt-oracle:{}", s(&clean));
    ok(&["denoise", "--input", s(&input), "--output", s(&output), "--config", s(&cfg), "--backend", &backend]);
    let before = mean_abs_z(&noisy);
    let after = mean_abs_z(&read(&output));
    assert!(after < 0.5 * before, "mean |z| {before} -> {after}");
}

#[test]
fn denoise_rejects_empty_input() {
    let dir = TempDir::new().unwrap();
    let input = dir.path().join("empty.xyz");
    std::fs::write(&input, "").unwrap();
    let output = dir.path().join("out.ply");
    assert_eq!(exit_code(&["denoise", "--input", s(&input), "--output", s(&output)]), 2);
}

#[test]
fn eval_reports_global_and_hole_scores() {
    let dir = TempDir::new().unwrap();
    let gt = write(dir.path(), "gt.ply", &sphere(1000, 9));
    let report = dir.path().join("r.json");
    let out = ok(&["eval", "--pred", s(&gt), "--gt", s(&gt), "--output", s(&report)]);
    let table = String::from_utf8(out.stdout).unwrap();
    assert!(table.contains("10^3*CD") && table.contains("global"));
    assert!(!table.contains("hole_only"));
    let r = json(&report);
    assert_eq!(r["global"]["chamfer"], 0.0);
    assert_eq!(r["global"]["f1"], 100.0);
    assert!(r["hole_only"].is_null());

    let (complete, incomplete, missing) = holed_sphere(dir.path());
    let out = ok(&["eval", "--pred", s(&incomplete), "--gt", s(&complete), "--missing", s(&missing), "--json"]);
    let r: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(r["hole_only"]["region"], "hole_only");
    assert_eq!(r["hole_only"]["completeness"], 0.0);
    assert!(r["global"]["f1"].as_f64().unwrap() < 100.0);
}

#[test]
fn eval_rejects_missing_files() {
    assert_eq!(exit_code(&["eval", "--pred", "/nonexistent/a.ply", "--gt", "/nonexistent/b.ply"]), 2);
}
