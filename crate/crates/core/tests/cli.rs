use std::process::{Command, Output};

fn bin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bec-memory")).args(args).output().expect("binary runs")
}

fn stdout(args: &[&str]) -> String {
    let out = bin(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

struct Csv {
    meta: Vec<String>,
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Csv {
    fn parse(text: &str) -> Self {
        let mut meta = Vec::new();
        let mut lines = text.lines();
        let header = loop {
            let l = lines.next().expect("header line");
            match l.strip_prefix("# ") {
                Some(m) => meta.push(m.to_string()),
                None => break l.split(',').map(str::to_string).collect(),
            }
        };
        let rows = lines.map(|l| l.split(',').map(str::to_string).collect()).collect();
        Csv { meta, header, rows }
    }

    fn col(&self, name: &str) -> Vec<f64> {
        let i = self.header.iter().position(|h| h == name).unwrap_or_else(|| panic!("no column {name}"));
        self.rows.iter().map(|r| r[i].parse().unwrap()).collect()
    }

    fn meta_value(&self, key: &str) -> Option<&str> {
        self.meta.iter().find_map(|m| m.strip_prefix(key)?.strip_prefix(" = "))
    }
}

#[test]
fn same_seed_is_byte_identical() {
    for cmd in ["fig3", "fig4", "tomography"] {
        assert_eq!(stdout(&[cmd, "--seed", "9"]), stdout(&[cmd, "--seed", "9"]), "{cmd}");
    }
    assert_ne!(stdout(&["fig3", "--seed", "9"]), stdout(&["fig3", "--seed", "10"]));
}

#[test]
fn header_records_command_seed_and_config() {
    let csv = Csv::parse(&stdout(&["fig7", "--seed", "4", "--set", "pulse.tau_p_ns=80"]));
    assert!(csv.meta[0].starts_with("bec-memory "));
    assert_eq!(csv.meta_value("command"), Some("fig7"));
    assert_eq!(csv.meta_value("seed"), Some("4"));
    assert_eq!(csv.meta_value("config pulse.tau_p_ns"), Some("80"));
    assert_eq!(csv.header, ["omega_c_mhz", "eta_comp", "eta_trans", "eta_on_axis", "eta_averaged"]);
}

#[test]
fn bad_configuration_exits_with_code_2() {
    assert_eq!(bin(&["fig3", "--set", "bogus.key=1"]).status.code(), Some(2));
    assert_eq!(bin(&["fig3", "--set", "pulse.tau_p_ns=-3"]).status.code(), Some(2));
    assert_eq!(bin(&["fig3", "--set", "no_equals_sign"]).status.code(), Some(2));
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.cfg");
    std::fs::write(&path, "seed = 1\nseed = 2\n").unwrap();
    let out = bin(&["fig3", "--config", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 2"));
}

#[test]
fn unreadable_config_file_is_a_config_error() {
    assert_eq!(bin(&["fig3", "--config", "/nonexistent/dir/x.cfg"]).status.code(), Some(2));
}

#[test]
fn config_file_round_trips_through_default_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("default.cfg");
    std::fs::write(&cfg, stdout(&["default-config"])).unwrap();
    assert_eq!(stdout(&["fig3", "--config", cfg.to_str().unwrap()]), stdout(&["fig3"]));
}

#[test]
fn out_flag_writes_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("fig5.csv");
    let out = bin(&["fig5", "--out", path.to_str().unwrap()]);
    assert!(out.status.success());
    assert!(out.stdout.is_empty());
    assert_eq!(std::fs::read_to_string(&path).unwrap(), stdout(&["fig5"]));
}

#[test]
fn preset_flag_changes_noise() {
    let a = Csv::parse(&stdout(&["fig3", "--preset", "unsynchronized"]));
    let b = Csv::parse(&stdout(&["fig3", "--preset", "line-synced"]));
    let sa: f64 = a.meta_value("sigma_alpha_model_ms").unwrap().parse().unwrap();
    let sb: f64 = b.meta_value("sigma_alpha_model_ms").unwrap().parse().unwrap();
    assert!((sa - 0.0568).abs() < 1e-3 && (sb - 1.137).abs() < 1e-3, "{sa} {sb}");
    assert_eq!(bin(&["fig3", "--preset", "nonsense"]).status.code(), Some(2));
}

#[test]
fn fig3_without_noise_matches_model() {
    let csv = Csv::parse(&stdout(&["fig3", "--set", "noise.sigma_b_mg=0"]));
    for (s, m) in csv.col("s1_over_s0_shot").iter().zip(csv.col("s1_over_s0_model")) {
        assert!((s - m).abs() < 1e-12, "{s} vs {m}");
    }
}

#[test]
fn fig7_factors_are_monotone() {
    let csv = Csv::parse(&stdout(&["fig7"]));
    let comp = csv.col("eta_comp");
    let trans = csv.col("eta_trans");
    assert!(comp.windows(2).all(|w| w[1] <= w[0] + 1e-15));
    assert!(trans.windows(2).all(|w| w[1] >= w[0] - 1e-15));
    for (i, c) in comp.iter().enumerate() {
        assert!((csv.col("eta_on_axis")[i] - c * trans[i]).abs() < 1e-14);
    }
}

#[test]
fn fig8_vanishes_at_two_photon_resonance() {
    let csv = Csv::parse(&stdout(&["fig8", "--set", "fig8.delta_min_mhz=-10", "--set", "fig8.delta_max_mhz=10", "--set", "fig8.points=21"]));
    let d = csv.col("delta2_mhz");
    let i = d.iter().position(|&x| x == 0.0).expect("grid contains zero");
    assert_eq!(csv.col("re_chi_dc0")[i], 0.0);
    assert_eq!(csv.col("im_chi_dc0")[i], 0.0);
}

#[test]
fn fig6_plateaus_at_condensate_fraction() {
    let csv = Csv::parse(&stdout(&["fig6"]));
    for fc in [0.3, 0.6, 0.9] {
        let col = csv.col(&format!("eta_fc_{fc}"));
        assert_eq!(col[0], 1.0);
        // thermal part has decayed after 300 us, recoil decay is still negligible
        assert!((col.last().unwrap() - fc).abs() < 0.05, "{fc}: {}", col.last().unwrap());
    }
}

#[test]
fn tomography_fidelity_is_high() {
    let csv = Csv::parse(&stdout(&["tomography", "--set", "tomography.repetitions=50"]));
    let f = csv.col("avg_fidelity");
    assert_eq!(f.len(), 50);
    let mean = f.iter().sum::<f64>() / f.len() as f64;
    assert!(mean > 0.98 && mean <= 1.0, "{mean}");
}
