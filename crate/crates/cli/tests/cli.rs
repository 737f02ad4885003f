use std::fs;
use std::process::{Command, Output};

use serde_json::Value;

fn stfem(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_stfem")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

const SMALL: [&str; 6] = ["--nu", "1,0.01", "--h-cells", "5", "--k-cells", "40,80"];

#[test]
fn eta_table_markdown_shows_reference_digits() {
    let o = stfem(&["table", "eta", "--nu", "1", "--h-cells", "5", "--k-cells", "40"]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("| 1/40 | 0.3014 |"), "{}", stdout(&o));
}

#[test]
fn gamma_example_cell() {
    let o = stfem(&["table", "gamma", "--nu", "0.01", "--h-cells", "20", "--k-cells", "400", "--format", "csv"]);
    assert_eq!(code(&o), 0);
    let text = stdout(&o);
    let rec = csv::Reader::from_reader(text.as_bytes()).records().next().unwrap().unwrap();
    for (i, want) in [0.9979, 0.0465, 0.0707].into_iter().enumerate() {
        let got: f64 = rec[i + 1].parse().unwrap();
        assert!((got - want).abs() <= 1e-4 + 1e-3 * want, "{got} vs {want}");
    }
}

#[test]
fn csv_and_json_carry_identical_numbers() {
    let mut args = vec!["table", "gamma", "--format", "csv"];
    args.extend(SMALL);
    let csv_out = stdout(&stfem(&args));
    args[3] = "json";
    let json: Value = serde_json::from_str(&stdout(&stfem(&args))).unwrap();

    let mut rdr = csv::Reader::from_reader(csv_out.as_bytes());
    let header = rdr.headers().unwrap().clone();
    assert_eq!(header.len(), 1 + 2 * 3);
    let cells = json["cells"].as_array().unwrap();
    let (nh, nk) = (1, 2);
    for (ki, rec) in rdr.records().enumerate() {
        let rec = rec.unwrap();
        assert_eq!(rec[0].parse::<usize>().unwrap(), [40, 80][ki]);
        for col in 1..rec.len() {
            let (group, i) = ((col - 1) / 3, (col - 1) % 3);
            let cell = &cells[group * nh * nk + ki];
            let from_json = cell["values"][i].as_f64().unwrap();
            assert_eq!(rec[col].parse::<f64>().unwrap(), from_json, "column {}", &header[col]);
        }
    }
}

#[test]
fn fast_output_is_bit_identical() {
    let mut args = vec!["table", "eta_hat", "--format", "json", "--threads", "3"];
    args.extend(SMALL);
    let a = stfem(&args).stdout;
    args[5] = "1";
    let b = stfem(&args).stdout;
    assert_eq!(a, b);
}

#[test]
fn rigorous_table_adds_widths() {
    let o = stfem(&["table", "eta", "--mode", "rigorous", "--format", "csv", "--nu", "1", "--h-cells", "3", "--k-cells", "4"]);
    assert_eq!(code(&o), 0);
    let text = stdout(&o);
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    assert_eq!(&rdr.headers().unwrap()[2], "eta_width[nu=1 h=1/3]");
    let rec = rdr.records().next().unwrap().unwrap();
    let width: f64 = rec[2].parse().unwrap();
    assert!(width >= 0.0 && width < 1e-6 * rec[1].parse::<f64>().unwrap());
}

#[test]
fn constants_json_round_trips() {
    let o = stfem(&["constants", "--nu", "1", "--h-cells", "5", "--k-cells", "40", "--format", "json"]);
    assert_eq!(code(&o), 0);
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    let c1t = v["errors"]["c1_tilde"]["lo"].as_f64().unwrap();
    assert!((c1t - 0.4909).abs() < 1e-4, "{c1t}");
    assert_eq!(v["config"]["mode"], "fast");
    assert!(v["stability"]["gammaT"]["hi"].is_f64());
    let again: Value = serde_json::from_str(&serde_json::to_string(&v).unwrap()).unwrap();
    assert_eq!(v, again);
}

#[test]
fn rigorous_constants_are_ordered_intervals() {
    let o = stfem(&["constants", "--nu", "0.1", "--h-cells", "4", "--k-cells", "6", "--mode", "rigorous", "--format", "csv"]);
    assert_eq!(code(&o), 0);
    let text = stdout(&o);
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    let mut rows = 0;
    for rec in rdr.records() {
        let rec = rec.unwrap();
        let (lo, hi): (f64, f64) = (rec[2].parse().unwrap(), rec[3].parse().unwrap());
        assert!(lo <= hi, "{}", &rec[0]);
        rows += 1;
    }
    assert_eq!(rows, 19);
}

#[test]
fn validate_reports_and_exit_codes() {
    let base = ["--nu", "1", "--h-cells", "10", "--k-cells", "80"];
    for case in ["u1", "zero"] {
        let mut args = vec!["validate", "--case", case, "--format", "json"];
        args.extend(base);
        let o = stfem(&args);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
        let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
        assert_eq!(v["all_hold"], true);
        assert_eq!(v["report"]["checks"].as_array().unwrap().len(), 5);
    }
    let mut args = vec!["validate", "--case", "u5"];
    args.extend(base);
    assert_eq!(code(&stfem(&args)), 1);
}

#[test]
fn qhat_instability_is_flagged() {
    let eta_hat = |k: &str| {
        let o = stfem(&["validate", "--scheme", "qhat", "--format", "json", "--nu", "1", "--h-cells", "5", "--k-cells", k]);
        assert_eq!(code(&o), 0);
        let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
        assert!(v["report"]["notes"][0].as_str().unwrap().contains("not stable"));
        v["report"]["checks"][1]["rhs"].as_f64().unwrap()
    };
    let ratio = eta_hat("80") / eta_hat("40");
    assert!((1.9..=2.1).contains(&ratio), "{ratio}");
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(code(&stfem(&["table", "eta", "--k-cells", ""])), 1);
    assert_eq!(code(&stfem(&["constants"])), 1);
    assert_eq!(code(&stfem(&["table", "zeta"])), 1);
    assert_eq!(code(&stfem(&["table", "eta", "--mode", "exact"])), 1);
    assert_eq!(code(&stfem(&["constants", "--nu", "1", "--h-cells", "1", "--k-cells", "4"])), 1);
    assert_eq!(code(&stfem(&["constants", "--nu", "1", "--h-cells", "21", "--k-cells", "200", "--mode", "rigorous"])), 1);
    assert_eq!(code(&stfem(&["--help"])), 0);
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    fs::write(&cfg, "# single point\nnu = 0.1\nh-cells = 5\nk-cells = 40\nformat = json\n").unwrap();
    let path = cfg.to_str().unwrap();
    let v: Value = serde_json::from_str(&stdout(&stfem(&["constants", "--config", path]))).unwrap();
    assert_eq!(v["config"]["nu"], 0.1);
    let v: Value = serde_json::from_str(&stdout(&stfem(&["constants", "--config", path, "--nu", "1"]))).unwrap();
    assert_eq!(v["config"]["nu"], 1.0);
    fs::write(&cfg, "nu = 0.1\nwhat = 3\n").unwrap();
    assert_eq!(code(&stfem(&["constants", "--config", path])), 1);
}

#[test]
fn solution_and_matrix_exports() {
    let dir = tempfile::tempdir().unwrap();
    let sol = dir.path().join("u.csv");
    let o = stfem(&["solve", "--case", "u2", "--nu", "1", "--h-cells", "4", "--k-cells", "3", "--out", sol.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    let text = fs::read_to_string(&sol).unwrap();
    assert_eq!(text.lines().count(), 1 + 4 * 5);
    assert_eq!(text.lines().next().unwrap(), "t,x,value");

    let mats = dir.path().join("mats");
    let o = stfem(&["matrices", "--nu", "1", "--h-cells", "2", "--k-cells", "1", "--out", mats.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    let q = fs::read_to_string(mats.join("Q.txt")).unwrap();
    // the 1x1 system matrix is 7/3
    let v: f64 = q.split_whitespace().nth(2).unwrap().parse().unwrap();
    assert!((v - 7.0 / 3.0).abs() < 1e-15);
    for name in ["A", "M", "B", "G", "U", "W", "Y", "Qhat"] {
        assert!(mats.join(format!("{name}.txt")).exists());
    }
    assert_eq!(code(&stfem(&["matrices", "--nu", "1", "--h-cells", "2", "--k-cells", "1"])), 1);
}
