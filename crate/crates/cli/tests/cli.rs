//! End-to-end tests against the compiled binary: exit codes, file layout,
//! flag precedence, and analysis semantics on synthetic runs.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::time::Instant;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_opencoop"))
}

fn tmp(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("opencoop-cli-{}-{name}", std::process::id()));
    let _ = fs::remove_dir_all(&dir);
    fs::create_dir_all(&dir).unwrap();
    dir
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

const CONFIG: &str = r#"
seed = 5
generations = 3
pop_cap = 8
evict_window = 4

[env]
kind = "two-stage"
conventions = [10.0, 8.0, 6.0]
off_payoff = 0.0

[solver]
samples = 300

[init]
size = 3
style = "spectrum"
uniform_first = false
"#;

#[test]
fn run_writes_layout_and_respects_seed_override() {
    let dir = tmp("run");
    let config = dir.join("config.toml");
    fs::write(&config, CONFIG).unwrap();

    let start = Instant::now();
    let out = bin()
        .args(["run", "--config"])
        .arg(&config)
        .args(["--seed", "7", "--out"])
        .arg(dir.join("run"))
        .output()
        .unwrap();
    assert_eq!(code(&out), 0, "stderr: {}", String::from_utf8_lossy(&out.stderr));
    // A minimal run completes far inside the 10-second budget.
    assert!(start.elapsed().as_secs_f64() < 10.0);

    for file in [
        "config.snapshot",
        "trace.jsonl",
        "checkpoint.meta",
        "population/gen_0.csv",
        "population/gen_3.csv",
        "population/gen_3_visits.csv",
        "payoff/gen_1.csv",
        "payoff/gen_3.csv",
    ] {
        assert!(dir.join("run").join(file).exists(), "missing {file}");
    }
    // The override beats the file value and lands in the snapshot.
    let snapshot = fs::read_to_string(dir.join("run/config.snapshot")).unwrap();
    assert!(snapshot.contains("seed = 7"), "snapshot: {snapshot}");
    let _ = fs::remove_dir_all(&dir);
}

#[test]
fn missing_conventions_exits_2_naming_the_key() {
    let dir = tmp("badcfg");
    let config = dir.join("config.toml");
    fs::write(&config, "seed = 1\n").unwrap();
    let out = bin()
        .args(["run", "--config"])
        .arg(&config)
        .args(["--out"])
        .arg(dir.join("run"))
        .output()
        .unwrap();
    assert_eq!(code(&out), 2);
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("env.conventions"), "stderr: {stderr}");
    let _ = fs::remove_dir_all(&dir);
}

#[test]
fn same_seed_runs_are_byte_identical() {
    let dir = tmp("determinism");
    let config = dir.join("config.toml");
    fs::write(&config, CONFIG).unwrap();
    for name in ["a", "b"] {
        let out = bin()
            .args(["run", "--config"])
            .arg(&config)
            .args(["--out"])
            .arg(dir.join(name))
            .output()
            .unwrap();
        assert_eq!(code(&out), 0);
    }
    let a = fs::read(dir.join("a/trace.jsonl")).unwrap();
    let b = fs::read(dir.join("b/trace.jsonl")).unwrap();
    assert_eq!(a, b);
    let _ = fs::remove_dir_all(&dir);
}

fn run_once(dir: &Path) -> PathBuf {
    let config = dir.join("config.toml");
    fs::write(&config, CONFIG).unwrap();
    let run_dir = dir.join("run");
    let out = bin()
        .args(["run", "--config"])
        .arg(&config)
        .args(["--out"])
        .arg(&run_dir)
        .output()
        .unwrap();
    assert_eq!(code(&out), 0);
    run_dir
}

#[test]
fn analyze_emits_reports_idempotently() {
    let dir = tmp("analyze");
    let run_dir = run_once(&dir);

    let out = bin().arg("analyze").arg(&run_dir).output().unwrap();
    assert_eq!(code(&out), 0, "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("rank_within_k_fraction="));

    let first: Vec<String> = [
        "centrality_matrix.csv",
        "series.csv",
        "convergence_report.txt",
        "verdict.txt",
    ]
    .iter()
    .map(|f| {
        let p = run_dir.join(f);
        assert!(p.exists(), "missing {f}");
        fs::read_to_string(p).unwrap()
    })
    .collect();

    // Re-analysis is byte-identical.
    let out = bin().arg("analyze").arg(&run_dir).output().unwrap();
    assert_eq!(code(&out), 0);
    for (f, before) in [
        "centrality_matrix.csv",
        "series.csv",
        "convergence_report.txt",
        "verdict.txt",
    ]
    .iter()
    .zip(&first)
    {
        assert_eq!(&fs::read_to_string(run_dir.join(f)).unwrap(), before);
    }
    let _ = fs::remove_dir_all(&dir);
}

#[test]
fn analyze_skips_corrupt_snapshots_and_fails_over_ten_percent() {
    let dir = tmp("corrupt");
    let run_dir = run_once(&dir);
    // 1 of 3 generations corrupt: way over the 10% skip budget.
    fs::write(run_dir.join("payoff/gen_2.csv"), "garbage\n").unwrap();
    let out = bin().arg("analyze").arg(&run_dir).output().unwrap();
    assert_eq!(code(&out), 1);
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("skipping generation 2"), "stderr: {stderr}");
    let _ = fs::remove_dir_all(&dir);
}

#[test]
fn solve_emits_expected_columns_per_flag() {
    let dir = tmp("solve");
    let payoff = dir.join("payoff.csv");
    // Uniform matrix: phi must be uniform under both flags.
    fs::write(&payoff, "n=4\n3,3,3,3\n3,3,3,3\n3,3,3,3\n3,3,3,3\n").unwrap();

    for flag in ["sv", "r"] {
        let out = bin()
            .arg("solve")
            .arg(&payoff)
            .args(["--flag", flag, "--seed", "3"])
            .output()
            .unwrap();
        assert_eq!(code(&out), 0);
        let text = String::from_utf8_lossy(&out.stdout);
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), "id,sigma_hat,sigma,shapley,phi");
        for line in lines {
            let fields: Vec<&str> = line.split(',').collect();
            assert_eq!(fields.len(), 5);
            if flag == "r" {
                assert!(fields[3].is_empty(), "reward solver leaves shapley blank");
            } else {
                assert!(!fields[3].is_empty());
            }
            let phi: f64 = fields[4].parse().unwrap();
            assert!((phi - 0.25).abs() < 0.05, "phi {phi}");
        }
    }
    let _ = fs::remove_dir_all(&dir);
}

#[test]
fn solve_is_reproducible_and_flags_the_weak_strategy() {
    let dir = tmp("solve2");
    let payoff = dir.join("payoff.csv");
    // Strategy 2 scores near zero with everyone.
    fs::write(
        &payoff,
        "n=3\n6.0,5.0,0.01\n5.0,6.5,0.01\n0.01,0.01,0.02\n",
    )
    .unwrap();

    let run = |seed: &str| {
        let out = bin()
            .arg("solve")
            .arg(&payoff)
            .args(["--flag", "sv", "--seed", seed])
            .output()
            .unwrap();
        assert_eq!(code(&out), 0);
        String::from_utf8_lossy(&out.stdout).into_owned()
    };
    let a = run("9");
    let b = run("9");
    assert_eq!(a, b, "same seed reproduces the shapley column");

    for flag in ["sv", "r"] {
        let out = bin()
            .arg("solve")
            .arg(&payoff)
            .args(["--flag", flag])
            .output()
            .unwrap();
        let text = String::from_utf8_lossy(&out.stdout).into_owned();
        let phis: Vec<f64> = text
            .lines()
            .skip(1)
            .map(|l| l.split(',').nth(4).unwrap().parse().unwrap())
            .collect();
        let argmax = (0..3)
            .max_by(|&x, &y| phis[x].partial_cmp(&phis[y]).unwrap())
            .unwrap();
        assert_eq!(argmax, 2, "{flag}: {phis:?}");
    }
    let _ = fs::remove_dir_all(&dir);
}

#[test]
fn solve_rejects_non_square_and_tiny_inputs() {
    let dir = tmp("solve3");
    let bad = dir.join("bad.csv");
    fs::write(&bad, "n=2\n1.0,2.0\n3.0\n").unwrap();
    let out = bin().arg("solve").arg(&bad).output().unwrap();
    assert_eq!(code(&out), 2);

    let single = dir.join("single.csv");
    fs::write(&single, "n=1\n4.0\n").unwrap();
    let out = bin().arg("solve").arg(&single).output().unwrap();
    assert_eq!(code(&out), 2);
    let _ = fs::remove_dir_all(&dir);
}

#[test]
fn crossplay_reports_and_validates() {
    let dir = tmp("crossplay");
    let run_dir = run_once(&dir);
    let config = dir.join("config.toml");
    let population = run_dir.join("population/gen_3.csv");

    // Probes = the population itself: every strategy's self-play payoff sits
    // within its [min, max] band.
    let out = bin()
        .arg("crossplay")
        .arg(&population)
        .arg(&population)
        .args(["--config"])
        .arg(&config)
        .output()
        .unwrap();
    assert_eq!(code(&out), 0, "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.starts_with("probes="));
    let rows: Vec<&str> = text.lines().skip(2).collect();
    assert!(!rows.is_empty());
    for row in rows {
        let fields: Vec<f64> = row
            .split(',')
            .skip(1)
            .map(|v| v.parse().unwrap())
            .collect();
        assert!(fields[0] <= fields[1] && fields[1] <= fields[2]);
    }

    // Empty probe set: validation failure.
    let empty = dir.join("empty.csv");
    fs::write(&empty, "id,birth_generation,fr0,fr1,fr2\n").unwrap();
    let out = bin()
        .arg("crossplay")
        .arg(&population)
        .arg(&empty)
        .args(["--config"])
        .arg(&config)
        .output()
        .unwrap();
    assert_eq!(code(&out), 2);
    let _ = fs::remove_dir_all(&dir);
}

#[test]
fn crossplay_adaptive_strategy_covers_stubborn_probes() {
    // A hand-written uniform-then-copy strategy against the three stubborn
    // convention probes scores at least the smallest convention payoff.
    let dir = tmp("adaptive");
    let config = dir.join("config.toml");
    fs::write(&config, CONFIG).unwrap();

    let mut pop = String::from("id,birth_generation,fr0,fr1,fr2");
    for r in 0..3 {
        for b in 0..3 {
            pop.push_str(&format!(",r{r}_{b}"));
        }
    }
    pop.push('\n');
    let third = 1.0 / 3.0;
    pop.push_str(&format!(
        "0,0,{third},{third},{third},1,0,0,0,1,0,0,0,1\n"
    ));
    let pop_path = dir.join("pop.csv");
    fs::write(&pop_path, &pop).unwrap();

    let mut probes = String::from("id,birth_generation,fr0,fr1,fr2");
    for r in 0..3 {
        for b in 0..3 {
            probes.push_str(&format!(",r{r}_{b}"));
        }
    }
    probes.push('\n');
    for a in 0..3 {
        let mut one_hot = [0.0; 3];
        one_hot[a] = 1.0;
        let row: Vec<String> = (0..4).flat_map(|_| one_hot.iter().map(|v| v.to_string())).collect();
        probes.push_str(&format!("{},0,{}\n", 10 + a, row.join(",")));
    }
    let probes_path = dir.join("probes.csv");
    fs::write(&probes_path, &probes).unwrap();

    let out = bin()
        .arg("crossplay")
        .arg(&pop_path)
        .arg(&probes_path)
        .args(["--config"])
        .arg(&config)
        .output()
        .unwrap();
    assert_eq!(code(&out), 0, "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8_lossy(&out.stdout);
    let row = text.lines().nth(2).unwrap();
    let min: f64 = row.split(',').nth(1).unwrap().parse().unwrap();
    // Against stubborn convention a: round 1 pays conv[a]/3, round 2 copies
    // for the full conv[a]; worst case is the smallest convention: 6 * 4/3.
    assert!((min - 8.0).abs() < 1e-9, "min {min}");
    let _ = fs::remove_dir_all(&dir);
}

#[test]
fn analyze_detects_the_never_preferred_pathology() {
    // Hand-built run dir: every generation's new strategy pays everyone
    // almost nothing, so it is never preferred and the verdict is 0.
    let dir = tmp("patho");
    let run_dir = dir.join("run");
    fs::create_dir_all(run_dir.join("payoff")).unwrap();
    fs::write(
        run_dir.join("config.snapshot"),
        "seed = 0\n[env]\nconventions = [10.0, 8.0, 6.0]\n",
    )
    .unwrap();

    let mut trace = String::new();
    for t in 1..=3u32 {
        let n = t as usize + 2;
        // Incumbents coordinate well; the newest row/column is ~zero.
        let mut payoff = format!("n={n}\n");
        for i in 0..n {
            let row: Vec<String> = (0..n)
                .map(|j| {
                    if i == n - 1 || j == n - 1 {
                        "0.01".to_string()
                    } else if i == j {
                        "1.0".to_string()
                    } else {
                        format!("{}", 5.0 + ((i * 7 + j * 3) % 4) as f64)
                    }
                })
                .collect();
            payoff.push_str(&row.join(","));
            payoff.push('\n');
        }
        fs::write(run_dir.join(format!("payoff/gen_{t}.csv")), payoff).unwrap();

        let pop_ids: Vec<String> = (0..n).map(|i| i.to_string()).collect();
        trace.push_str(&format!(
            "{{\"generation\":{t},\"new_id\":{},\"eta\":1.0,\"rank\":{n},\"rank_satisfied\":false,\"phi\":[],\"payoff_row\":[],\"evicted_id\":null,\"pop_ids\":[{}]}}\n",
            n - 1,
            pop_ids.join(",")
        ));
    }
    fs::write(run_dir.join("trace.jsonl"), trace).unwrap();

    let out = bin()
        .arg("analyze")
        .arg(&run_dir)
        .args(["--k", "1"])
        .output()
        .unwrap();
    assert_eq!(code(&out), 0, "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let verdict = fs::read_to_string(run_dir.join("verdict.txt")).unwrap();
    assert!(
        verdict.contains("rank_within_k_fraction=0.0000000000000000e0"),
        "verdict: {verdict}"
    );
    let _ = fs::remove_dir_all(&dir);
}

#[test]
fn analyze_diagonal_is_row_minimum_for_always_preferred_runs() {
    // Hand-built run dir where the newest strategy pays everyone the most:
    // the centrality-matrix diagonal must be each row's minimum.
    let dir = tmp("diag");
    let run_dir = dir.join("run");
    fs::create_dir_all(run_dir.join("payoff")).unwrap();
    fs::write(
        run_dir.join("config.snapshot"),
        "seed = 0\n[env]\nconventions = [10.0, 8.0, 6.0]\n",
    )
    .unwrap();

    let mut trace = String::new();
    for t in 1..=3u32 {
        let n = t as usize + 2;
        let mut payoff = format!("n={n}\n");
        for i in 0..n {
            let row: Vec<String> = (0..n)
                .map(|j| {
                    if i == n - 1 || j == n - 1 {
                        "9.0".to_string()
                    } else if i == j {
                        "0.5".to_string()
                    } else {
                        "1.0".to_string()
                    }
                })
                .collect();
            payoff.push_str(&row.join(","));
            payoff.push('\n');
        }
        fs::write(run_dir.join(format!("payoff/gen_{t}.csv")), payoff).unwrap();
        let pop_ids: Vec<String> = (0..n).map(|i| i.to_string()).collect();
        trace.push_str(&format!(
            "{{\"generation\":{t},\"new_id\":{},\"eta\":0.0,\"rank\":1,\"rank_satisfied\":true,\"phi\":[],\"payoff_row\":[],\"evicted_id\":null,\"pop_ids\":[{}]}}\n",
            n - 1,
            pop_ids.join(",")
        ));
    }
    fs::write(run_dir.join("trace.jsonl"), trace).unwrap();

    let out = bin().arg("analyze").arg(&run_dir).args(["--k", "1"]).output().unwrap();
    assert_eq!(code(&out), 0);
    let matrix = fs::read_to_string(run_dir.join("centrality_matrix.csv")).unwrap();
    for (idx, line) in matrix.lines().skip(1).enumerate() {
        let cells: Vec<Option<f64>> = line
            .split(',')
            .skip(1)
            .map(|c| if c.is_empty() { None } else { Some(c.parse().unwrap()) })
            .collect();
        let diag_col = idx + 2; // new strategy of generation t sits at id t+2
        let diag = cells[diag_col].expect("diagonal cell defined");
        let min = cells.iter().flatten().cloned().fold(f64::INFINITY, f64::min);
        assert_eq!(diag, min, "row {idx}");
    }
    let verdict = fs::read_to_string(run_dir.join("verdict.txt")).unwrap();
    assert!(verdict.contains("rank_within_k_fraction=1.0"), "{verdict}");
    let _ = fs::remove_dir_all(&dir);
}
