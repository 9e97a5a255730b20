use magnomech::sweep::{run_sweep, write_csv, write_outputs, Config, OutputFormat, VERSION};

const GRID: &str = "\
squeeze_r = 0.6
sweep.axis1 = G_hz 0 1.2e6 3
sweep.axis2 = bath_temp_mk 5 150 4 log
";

fn files_for(threads: usize) -> (String, String) {
    let cfg = Config::parse(GRID).unwrap();
    let rows = run_sweep(&cfg, threads).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let written = write_outputs(dir.path(), "grid", OutputFormat::Both, &cfg, &rows).unwrap();
    assert_eq!(written.len(), 2);
    (
        std::fs::read_to_string(dir.path().join("grid.csv")).unwrap(),
        std::fs::read_to_string(dir.path().join("grid.json")).unwrap(),
    )
}

#[test]
fn thread_count_does_not_change_the_files() {
    let single = files_for(1);
    assert_eq!(single, files_for(4));
    assert_eq!(single, files_for(0));
}

#[test]
fn csv_is_self_describing_and_complete() {
    let (csv, json) = files_for(2);
    assert!(csv.starts_with(&format!("# magnomech {VERSION}\n")));
    let header: String = csv.lines().filter_map(|l| l.strip_prefix("# ")).skip(1).collect::<Vec<_>>().join("\n");
    let body: Vec<&str> = csv.lines().filter(|l| !l.starts_with('#')).collect();

    // Rerunning from the embedded header reproduces the data. Hz/rad-s
    // conversions may move parameters by an ulp, far below the printed digits.
    let reparsed = Config::parse(&header).unwrap();
    assert_eq!(reparsed.sweep, Config::parse(GRID).unwrap().sweep);
    let rows = run_sweep(&reparsed, 1).unwrap();
    let mut again = Vec::new();
    write_csv(&mut again, &reparsed, &rows).unwrap();
    let again = String::from_utf8(again).unwrap();
    let again_body: Vec<&str> = again.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(body, again_body);

    assert_eq!(body.len(), 1 + 12);
    assert!(body[0].starts_with("i1,i2,G_hz,bath_temp_mk,E_cavity"));
    assert!(!csv.contains("NaN") && !csv.contains("inf"));

    let v: serde_json::Value = serde_json::from_str(&json).unwrap();
    assert_eq!(v["rows"].as_array().unwrap().len(), 12);
}
