use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use vanet_sim::cli::main_with;

const SMALL: &str = r#"
[run]
seed = 7
steps = 30
warmup = 5

[scenario.synthetic]
grid_cols = 3
grid_rows = 3
block_m = 250.0
spawn_rate = 0.4
initial_vehicles = 12

[rsu]
count = 2
"#;

fn bundled() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios/grid4x4.toml")
}

fn write_config(dir: &Path, text: &str) -> PathBuf {
    let p = dir.join("exp.toml");
    fs::write(&p, text).unwrap();
    p
}

fn code(args: &[&str]) -> (i32, String, String) {
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let mut full = vec!["vanet-sim"];
    full.extend_from_slice(args);
    let c = main_with(full, &mut out, &mut err);
    (c, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

#[test]
fn exit_codes() {
    let bin = env!("CARGO_BIN_EXE_vanet-sim");
    let ok = Command::new(bin).args(["validate-config"]).arg(bundled()).output().unwrap().status;
    assert_eq!(ok.code(), Some(0));
    let missing = Command::new(bin).args(["run"]).output().unwrap();
    assert_eq!(missing.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&missing.stderr).contains("--config"));

    let dir = tempfile::tempdir().unwrap();
    let bad = write_config(dir.path(), "[run]\nsteps = 10\nbogus = 1\n");
    let (c, _, err) = code(&["validate-config", bad.to_str().unwrap()]);
    assert_eq!(c, 2);
    assert!(err.contains("bogus"), "{err}");

    let trace = write_config(dir.path(), "[scenario]\ntrace = \"nowhere.csv\"\n");
    let (c, _, _) = code(&["run", "--config", trace.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(c, 3);

    assert_eq!(code(&["--help"]).0, 0);
}

#[test]
fn run_writes_one_row_per_step() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let out = dir.path().join("out");
    let (c, stdout, err) = code(&["run", "--config", cfg.to_str().unwrap(), "--algorithm", "greedy", "--out", out.to_str().unwrap()]);
    assert_eq!(c, 0, "{err}");
    assert!(stdout.contains("greedy: 30 steps"));
    let log = fs::read_to_string(out.join("greedy.csv")).unwrap();
    let mut lines = log.lines();
    assert_eq!(
        lines.next().unwrap(),
        "step,algorithm,L_avg,mean_delay_s,throughput_mbps,connectivity_rate,pair_count,mode,Q,delta,applied"
    );
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 30);
    for (t, row) in rows.iter().enumerate() {
        assert!(row.starts_with(&format!("{t},greedy,")));
        assert!(row.ends_with(",,,,"), "baseline rows leave decision columns empty: {row}");
    }
    let summary = fs::read_to_string(out.join("summary.csv")).unwrap();
    assert!(summary.lines().any(|l| l.starts_with("greedy,L_avg,25,")));
}

#[test]
fn zero_steps_give_empty_summaries() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &SMALL.replace("steps = 30", "steps = 0"));
    let out = dir.path().join("out");
    let (c, _, err) = code(&["compare", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(c, 0, "{err}");
    let summary = fs::read_to_string(out.join("summary.csv")).unwrap();
    for line in summary.lines().skip(2) {
        assert!(line.ends_with(",0,,,,,,,"), "{line}");
    }
    let log = fs::read_to_string(out.join("hierarchical.csv")).unwrap();
    assert_eq!(log.lines().count(), 1);
}

#[test]
fn compare_is_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let outs: Vec<PathBuf> = (0..2).map(|i| dir.path().join(format!("out{i}"))).collect();
    for o in &outs {
        let (c, _, err) = code(&["compare", "--config", cfg.to_str().unwrap(), "--out", o.to_str().unwrap()]);
        assert_eq!(c, 0, "{err}");
    }
    let mut names: Vec<_> = fs::read_dir(&outs[0]).unwrap().map(|e| e.unwrap().file_name()).collect();
    names.sort();
    assert_eq!(names.len(), 7);
    for name in names {
        assert_eq!(fs::read(outs[0].join(&name)).unwrap(), fs::read(outs[1].join(&name)).unwrap(), "{name:?}");
    }
}

#[test]
fn convert_then_run_on_trace() {
    let dir = tempfile::tempdir().unwrap();
    let fcd = r#"<fcd-export>
  <timestep time="0.00">
    <vehicle id="a" x="0.0" y="0.0" angle="90.0" speed="10.0"/>
    <vehicle id="b" x="200.0" y="0.0" angle="90.0" speed="10.0"/>
  </timestep>
  <timestep time="1.00">
    <vehicle id="a" x="10.0" y="0.0" angle="90.0" speed="10.0"/>
    <vehicle id="b" x="210.0" y="0.0" angle="90.0" speed="10.0"/>
  </timestep>
</fcd-export>"#;
    fs::write(dir.path().join("t.xml"), fcd).unwrap();
    let csv_path = dir.path().join("t.csv");
    let (c, _, err) = code(&["convert-trace", "--in", dir.path().join("t.xml").to_str().unwrap(), "--out", csv_path.to_str().unwrap()]);
    assert_eq!(c, 0, "{err}");
    let text = fs::read_to_string(&csv_path).unwrap();
    assert!(text.starts_with("time,id,x,y,speed,heading_rad\n"));
    assert_eq!(text.lines().count(), 5);

    let cfg = write_config(dir.path(), "[run]\nsteps = 2\nwarmup = 0\n[scenario]\ntrace = \"t.csv\"\n[rsu]\ncount = 1\n");
    let out = dir.path().join("out");
    let (c, _, err) = code(&["run", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(c, 0, "{err}");
    assert_eq!(fs::read_to_string(out.join("hierarchical.csv")).unwrap().lines().count(), 3);
}
