#![allow(dead_code)]

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use band_core::harness::brute_force_optimum;
use band_core::instance::{generate_instance, GeneratorConfig};
use band_core::netgraph::build_graph;

pub fn band(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_band")).args(args).output().expect("binary runs")
}

pub fn band_ok(args: &[&str]) -> Output {
    let out = band(args);
    assert!(out.status.success(), "band {args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
    out
}

/// Small generator config written to `dir`, with the first seed whose
/// instance is fully connected and small enough for the oracle.
pub fn small_config(dir: &Path) -> (PathBuf, u64) {
    let cfg = GeneratorConfig {
        n_biosensors: 3,
        n_sinks: 1,
        n_relays: 6,
        n_scenarios: 2,
        tx_range: 0.3,
        body_box: (0.3, 0.2, 0.4),
        ..Default::default()
    };
    let seed = (0..)
        .find(|&s| {
            let inst = generate_instance(&cfg, s).unwrap();
            build_graph(&inst).unwrap().warnings.is_empty() && matches!(brute_force_optimum(&inst), Ok(Some(_)))
        })
        .unwrap();
    let path = dir.join("config.json");
    fs::write(&path, serde_json::to_string(&cfg).unwrap()).unwrap();
    (path, seed)
}

fn s(p: &Path) -> &str {
    p.to_str().expect("utf-8 temp paths")
}

/// Runs every subcommand twice into `dir/a` and `dir/b` and lists the
/// result files (or stdout captures) that differ.
pub fn determinism(dir: &Path) -> Vec<String> {
    let (config, seed) = small_config(dir);
    let seed = seed.to_string();
    let mut differing = Vec::new();
    let mut outputs: Vec<Vec<(String, Vec<u8>)>> = Vec::new();
    for run in ["a", "b"] {
        let d = dir.join(run);
        fs::create_dir_all(&d).unwrap();
        let inst = d.join("inst.json");
        let set = d.join("set");
        let mut captured = Vec::new();
        band_ok(&["gen", "--config", s(&config), "--seed", &seed, "--out", s(&inst)]);
        band_ok(&["gen", "--config", s(&config), "--seed", &seed, "--count", "2", "--out", s(&set)]);
        band_ok(&["solve-exact", "--instance", s(&inst), "--out", s(&d.join("exact.json"))]);
        let robu = ["--ants", "6", "--max-outer-iterations", "3", "--seed", "11"];
        let mut args = vec!["solve-robuband", "--instance", s(&inst), "--out"];
        let rb = d.join("robuband.json");
        args.push(s(&rb));
        args.extend(robu);
        band_ok(&args);
        band_ok(&["oracle", "--instance", s(&inst), "--out", s(&d.join("oracle.json"))]);
        band_ok(&["export-lp", "--instance", s(&inst), "--out", s(&d.join("model.mps"))]);
        captured.push(("dump-graph".to_string(), band_ok(&["dump-graph", "--instance", s(&inst)]).stdout));
        captured.push((
            "validate".to_string(),
            band_ok(&["validate", "--instance", s(&inst), "--solution", s(&rb)]).stdout,
        ));
        let members: Vec<PathBuf> = {
            let mut v: Vec<PathBuf> = fs::read_dir(&set).unwrap().map(|e| e.unwrap().path()).collect();
            v.sort();
            v
        };
        let mut args = vec!["compare", "--budget", "30", "--csv"];
        let (csv, json) = (d.join("compare.csv"), d.join("compare.json"));
        args.push(s(&csv));
        args.push("--json");
        args.push(s(&json));
        args.extend(robu);
        args.extend(members.iter().map(|p| s(p)));
        // Exit code 2 only reports rows with errors (e.g. an unreachable couple).
        let code = band(&args).status.code();
        assert!(matches!(code, Some(0) | Some(2)), "compare exited with {code:?}");
        for name in ["inst.json", "exact.json", "robuband.json", "oracle.json", "model.mps", "compare.csv", "compare.json"] {
            captured.push((name.to_string(), fs::read(d.join(name)).unwrap()));
        }
        for p in &members {
            captured.push((format!("set/{}", p.file_name().unwrap().to_string_lossy()), fs::read(p).unwrap()));
        }
        outputs.push(captured);
    }
    for ((name, a), (_, b)) in outputs[0].iter().zip(&outputs[1]) {
        if a != b {
            differing.push(name.clone());
        }
    }
    differing
}
