use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("data")
        .join(name)
}

fn monomed(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_monomed"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    assert!(
        out.status.success(),
        "exit {:?}: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn reference_data() -> String {
    data("reference.csv").to_string_lossy().into_owned()
}

#[test]
fn fit_table_and_json() {
    let text = stdout(&monomed(&["fit", "--input", &reference_data()]));
    assert!(
        text.contains("partition: [9]∪[6,8]∪[5]∪[4]∪[3]∪[2]∪[1]"),
        "{text}"
    );
    assert!(text.contains("73.767"));

    let out = monomed(&[
        "fit",
        "--input",
        &reference_data(),
        "--method",
        "pava",
        "--format",
        "json",
    ]);
    let v: Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(v["method"], "pava");
    let fitted: Vec<f64> = v["doses"]
        .as_array()
        .unwrap()
        .iter()
        .map(|d| d["fitted"].as_f64().unwrap())
        .collect();
    assert_eq!(fitted.len(), 9);
    assert!((fitted[6] - (74.4 + 73.4 + 73.5) / 3.0).abs() < 1e-10);
}

#[test]
fn raw_input_is_accepted() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("raw.csv");
    std::fs::write(&path, "group,value\n0,1\n0,2\n1,4\n1,3\n2,2\n2,2.5\n").unwrap();
    let text = stdout(&monomed(&["fit", "--input", path.to_str().unwrap()]));
    assert!(text.contains("[1,2]"), "{text}");
}

#[test]
fn calibrate_then_med() {
    let dir = tempfile::tempdir().unwrap();
    let cutoffs = dir.path().join("cv.json");
    let cutoffs = cutoffs.to_str().unwrap();
    stdout(&monomed(&[
        "calibrate",
        "--input",
        &reference_data(),
        "--seed",
        "21",
        "--replicates",
        "20000",
        "--delta",
        "6.5",
        "--out",
        cutoffs,
    ]));

    let out = monomed(&[
        "med",
        "--input",
        &reference_data(),
        "--cutoffs",
        cutoffs,
        "--delta",
        "6.5",
        "--comparator",
        "hb",
        "--format",
        "json",
    ]);
    let v: Value = serde_json::from_str(&stdout(&out)).unwrap();
    let decisions = v["decisions"].as_array().unwrap();
    assert_eq!(decisions.len(), 2);
    assert_eq!(decisions[0]["method"], "step-up");
    assert_eq!(decisions[0]["med"], 4);
    assert_eq!(decisions[1]["method"], "hsu-berger");
    assert_eq!(decisions[1]["med"], 4);
    let stats: Vec<f64> = decisions[0]["statistics"]
        .as_array()
        .unwrap()
        .iter()
        .map(|s| s.as_f64().unwrap())
        .collect();
    for (got, want) in stats.iter().zip([-1.045, -0.555, 0.181, 1.097]) {
        assert!((got - want).abs() < 5e-3, "{got} vs {want}");
    }

    let text = stdout(&monomed(&[
        "med",
        "--input",
        &reference_data(),
        "--cutoffs",
        cutoffs,
        "--delta",
        "100",
    ]));
    assert!(text.contains("MED: none"), "{text}");
}

#[test]
fn calibration_output_ignores_thread_count() {
    let dir = tempfile::tempdir().unwrap();
    let mut outputs = Vec::new();
    for threads in ["1", "3"] {
        let path = dir.path().join(format!("cv{threads}.json"));
        stdout(&monomed(&[
            "--threads",
            threads,
            "calibrate",
            "--sizes",
            "5,5,5,5,5",
            "--seed",
            "8",
            "--replicates",
            "5000",
            "--out",
            path.to_str().unwrap(),
        ]));
        outputs.push(std::fs::read(&path).unwrap());
    }
    assert_eq!(outputs[0], outputs[1]);
}

#[test]
fn simulate_studies() {
    let scenario = data("scenario_med3.json");
    let scenario = scenario.to_str().unwrap();
    let run = |threads: &str| {
        stdout(&monomed(&[
            "--threads",
            threads,
            "simulate",
            "--scenario",
            scenario,
            "--study",
            "power",
            "--calibration-seed",
            "2",
            "--calibration-replicates",
            "5000",
            "--format",
            "json",
        ]))
    };
    let one = run("1");
    assert_eq!(one, run("2"));
    let v: Value = serde_json::from_str(&one).unwrap();
    assert_eq!(v["true_med"], 3);
    assert_eq!(v["methods"].as_array().unwrap().len(), 2);

    let text = stdout(&monomed(&[
        "simulate",
        "--scenario",
        scenario,
        "--study",
        "ordering",
        "--dose",
        "2",
        "--bumps",
        "0,1,2",
    ]));
    assert!(text.contains("pathwise violations: 0"), "{text}");
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.csv");
    std::fs::write(&bad, "label,n,mean,sd\n0,6,1.0,1.0\n1,six,2.0,1.0\n").unwrap();
    let out = monomed(&["fit", "--input", bad.to_str().unwrap()]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 3"));

    let scenario = dir.path().join("bad.json");
    std::fs::write(
        &scenario,
        r#"{"mu": [0, 2, 1], "sigma": 1, "sizes": [3, 3, 3],
        "delta": 0, "alpha": 0.05, "replicates": 100, "seed": 1}"#,
    )
    .unwrap();
    let out = monomed(&[
        "simulate",
        "--scenario",
        scenario.to_str().unwrap(),
        "--calibration-seed",
        "1",
    ]);
    assert_eq!(code(&out), 2);

    let out = monomed(&[
        "calibrate",
        "--sizes",
        "4,4,4",
        "--seed",
        "1",
        "--alpha",
        "0.7",
    ]);
    assert_eq!(code(&out), 3);

    let many = dir.path().join("many.csv");
    let mut text = String::from("label,n,mean,sd\n");
    for g in 0..25 {
        text.push_str(&format!("{g},3,{},1.0\n", 25 - g));
    }
    std::fs::write(&many, text).unwrap();
    let out = monomed(&[
        "fit",
        "--input",
        many.to_str().unwrap(),
        "--method",
        "oracle",
    ]);
    assert_eq!(code(&out), 3);

    let out = monomed(&[
        "calibrate",
        "--sizes",
        "4,4,4,4",
        "--seed",
        "3",
        "--alpha",
        "0.001",
        "--replicates",
        "1000",
    ]);
    assert_eq!(code(&out), 4);

    let cutoffs = dir.path().join("small.json");
    stdout(&monomed(&[
        "calibrate",
        "--sizes",
        "6,6,6",
        "--seed",
        "1",
        "--replicates",
        "2000",
        "--out",
        cutoffs.to_str().unwrap(),
    ]));
    let out = monomed(&[
        "med",
        "--input",
        &reference_data(),
        "--cutoffs",
        cutoffs.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 5);
}
