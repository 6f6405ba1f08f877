use std::path::Path;
use std::process::{Command, Output};

use poisratio::io::{read_counts, read_results, read_truth};
use poisratio::synthetic::{toy_qoi_problem, toy_ratio_problem};
use poisratio::GenBetaPrime;
use tempfile::TempDir;

fn poisratio(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_poisratio")).args(args).output().expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = poisratio(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn p(dir: &TempDir, name: &str) -> String {
    dir.path().join(name).to_str().unwrap().to_string()
}

fn synth(dir: &TempDir, problem: &str, bins: usize, seed: u64) -> String {
    let prefix = p(dir, &format!("{problem}{seed}"));
    ok(&["synth", "--problem", problem, "--bins", &bins.to_string(), "--seed", &seed.to_string(), "--out-prefix", &prefix]);
    prefix
}

#[test]
fn synth_files_round_trip() {
    let dir = TempDir::new().unwrap();
    let prefix = synth(&dir, "qoi", 40, 3);
    let data = toy_qoi_problem(40, 3).unwrap();
    assert_eq!(read_counts(format!("{prefix}_num.csv")).unwrap().counts, data.ratio.numerator);
    assert_eq!(read_counts(format!("{prefix}_denom.csv")).unwrap().counts, data.ratio.denominator);
    let truth = read_truth(format!("{prefix}_truth.csv")).unwrap();
    for (i, row) in truth.iter().enumerate() {
        assert!((row.true_z - data.ratio.truth[i]).abs() <= 1e-8 * data.ratio.truth[i]);
        assert!((row.true_t.unwrap() - data.truth[i]).abs() <= 1e-8 * data.truth[i]);
    }
}

#[test]
fn estimate_toy_ratio_brackets_map() {
    let dir = TempDir::new().unwrap();
    let prefix = synth(&dir, "ratio", 50, 0);
    let out = p(&dir, "res.csv");
    ok(&["estimate", &format!("{prefix}_num.csv"), &format!("{prefix}_denom.csv"), "--support-width", "0.75", "-o", &out]);
    let rows = read_results(&out).unwrap();
    assert_eq!(rows.len(), 50);
    for r in &rows {
        assert_eq!(r.status, "ok");
        assert!(r.hpd_lower < r.map_ratio && r.map_ratio < r.hpd_upper, "bin {}", r.bin);
        assert!(r.qoi.is_none());
    }
    // same inputs, same bytes
    let again = p(&dir, "res2.csv");
    ok(&["estimate", &format!("{prefix}_num.csv"), &format!("{prefix}_denom.csv"), "-o", &again]);
    assert_eq!(std::fs::read(&out).unwrap(), std::fs::read(&again).unwrap());
}

#[test]
fn pointwise_single_bin_file() {
    let dir = TempDir::new().unwrap();
    std::fs::write(dir.path().join("a.csv"), "bin_center,real_1\n0,30\n").unwrap();
    std::fs::write(dir.path().join("b.csv"), "bin_center,real_1\n0,10\n").unwrap();
    let stdout = ok(&["estimate", &p(&dir, "a.csv"), &p(&dir, "b.csv"), "--estimator", "pointwise"]);
    let rows = poisratio::io::parse_results(stdout.as_bytes()).unwrap();
    let r = &rows[0];
    assert_eq!((r.alpha_num, r.alpha_denom, r.p, r.q), (31.0, 11.0, 1.0, 1.0));
    assert_eq!(r.map_ratio, 3.0);
}

#[test]
fn qoi_run_and_push_forward_median() {
    let dir = TempDir::new().unwrap();
    let prefix = synth(&dir, "qoi", 50, 2);
    let out = p(&dir, "qoi.csv");
    ok(&[
        "estimate",
        &format!("{prefix}_num.csv"),
        &format!("{prefix}_denom.csv"),
        "--m",
        "0.2",
        "--z0",
        "-2",
        "--p",
        "0.5",
        "-o",
        &out,
    ]);
    let rows = read_results(&out).unwrap();
    for r in &rows {
        let q = r.qoi.expect("QoI columns");
        assert_eq!(q.shift, 10.0);
        let z = GenBetaPrime::new(r.alpha_num, r.alpha_denom, r.p, r.q).unwrap();
        let t = GenBetaPrime::new(r.alpha_num, r.alpha_denom, q.p, q.scale).unwrap();
        let zm = z.quantile(0.5).unwrap();
        let expected = 5.0 * (zm * zm + 2.0);
        // parameters pass through the file at 9 significant digits
        assert!((q.shift + t.quantile(0.5).unwrap() - expected).abs() <= 1e-6 * expected);
        assert!(q.hpd_lower >= 10.0 && q.hpd_lower < q.hpd_upper);
    }
    // HPD bands widen toward the ends of the domain
    let width = |r: &poisratio::io::ResultRow| r.qoi.unwrap().hpd_upper - r.qoi.unwrap().hpd_lower;
    let center = (width(&rows[24]) + width(&rows[25])) / 2.0;
    assert!(width(&rows[0]) > center && width(&rows[49]) > center);
}

fn score_line(stdout: &str, key: &str) -> f64 {
    stdout.lines().find_map(|l| l.strip_prefix(&format!("{key}="))).unwrap().parse().unwrap()
}

#[test]
fn score_reports_toy_metrics() {
    let dir = TempDir::new().unwrap();
    let prefix = synth(&dir, "ratio", 50, 1);
    let out = p(&dir, "res.csv");
    ok(&["estimate", &format!("{prefix}_num.csv"), &format!("{prefix}_denom.csv"), "-o", &out]);
    let per_bin = p(&dir, "scores.csv");
    let stdout = ok(&["score", &out, &format!("{prefix}_truth.csv"), "-o", &per_bin]);
    let mean = score_line(&stdout, "mean_crps");
    assert!((0.06..=0.24).contains(&mean), "{mean}");
    assert!(score_line(&stdout, "rel_mae") < 0.14);
    assert_eq!(std::fs::read_to_string(&per_bin).unwrap().lines().count(), 51);
}

#[test]
fn score_of_tight_forecast_is_near_zero() {
    let dir = TempDir::new().unwrap();
    // BP(4e6, 4e6, 1, 2) has median 2 and relative spread ~7e-4
    std::fs::write(
        dir.path().join("r.csv"),
        "bin,bin_center,map_ratio,alpha_num,alpha_denom,p,q,hpd_lower,hpd_upper,status\n0,0,2,4000000,4000000,1,2,1.99,2.01,ok\n",
    )
    .unwrap();
    std::fs::write(dir.path().join("t.csv"), "bin_center,true_z\n0,2\n").unwrap();
    let stdout = ok(&["score", &p(&dir, "r.csv"), &p(&dir, "t.csv")]);
    assert!(score_line(&stdout, "mean_crps") < 1e-3);
    assert_eq!(score_line(&stdout, "hpd_coverage"), 1.0);
}

#[test]
fn hpd_coverage_over_twenty_seeds() {
    let mut covered = 0usize;
    let mut total = 0usize;
    for seed in 0..20 {
        let data = toy_ratio_problem(50, 500 + seed).unwrap();
        let table = |c: &poisratio::CountData| poisratio::io::CountTable { centers: data.grid.centers_1d(), counts: c.clone() };
        let rows = poisratio::cli::estimate(&Default::default(), &table(&data.numerator), &table(&data.denominator))
            .map_err(|f| f.error)
            .unwrap();
        for (r, z) in rows.iter().zip(&data.truth) {
            covered += usize::from(r.hpd_lower <= *z && *z <= r.hpd_upper);
            total += 1;
        }
    }
    let rate = covered as f64 / total as f64;
    // bins are correlated through the kernel, so the band is wider than a binomial one on 1000 draws
    assert!((0.90..=0.99).contains(&rate), "coverage {rate}");
}

#[test]
fn bench_table_shape() {
    let stdout = ok(&["bench", "--bins", "10,60", "--trials", "2"]);
    let lines: Vec<&str> = stdout.lines().collect();
    assert_eq!(lines.len(), 3);
    let mean = |l: &str| l.split(',').nth(2).unwrap().parse::<f64>().unwrap();
    assert!(lines[1].starts_with("10,2,") && lines[2].starts_with("60,2,"));
    assert!(mean(lines[1]) <= mean(lines[2]));
}

#[test]
fn config_file_is_overridden_by_flags() {
    let dir = TempDir::new().unwrap();
    std::fs::write(dir.path().join("a.csv"), "bin_center,real_1\n0,30\n").unwrap();
    std::fs::write(dir.path().join("b.csv"), "bin_center,real_1\n0,10\n").unwrap();
    std::fs::write(dir.path().join("run.cfg"), "estimator = pointwise\na1 = 5\nb1 = 1\n").unwrap();
    let stdout = ok(&["estimate", &p(&dir, "a.csv"), &p(&dir, "b.csv"), "--config", &p(&dir, "run.cfg"), "--a1", "2"]);
    let r = &poisratio::io::parse_results(stdout.as_bytes()).unwrap()[0];
    assert_eq!((r.alpha_num, r.q), (32.0, 0.5));
}

#[test]
fn exit_codes_and_line_numbers() {
    let dir = TempDir::new().unwrap();
    std::fs::write(dir.path().join("bad.csv"), "bin_center,real_1\n0,1\n1,oops\n").unwrap();
    std::fs::write(dir.path().join("good.csv"), "bin_center,real_1\n0,1\n1,2\n").unwrap();
    let out = poisratio(&["estimate", &p(&dir, "bad.csv"), &p(&dir, "good.csv")]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 3"));
    assert_eq!(poisratio(&["estimate"]).status.code(), Some(1));
    let out = poisratio(&["estimate", &p(&dir, "good.csv"), &p(&dir, "good.csv"), "--m", "-1", "--z0", "0", "--p", "1"]);
    assert_eq!(out.status.code(), Some(1));
    std::fs::write(dir.path().join("k.csv"), "0,0\n0,0\n").unwrap();
    let out = poisratio(&["estimate", &p(&dir, "good.csv"), &p(&dir, "good.csv"), "--kernel-file", &p(&dir, "k.csv")]);
    assert_eq!(out.status.code(), Some(3));
    assert!(Path::new(env!("CARGO_BIN_EXE_poisratio")).exists());
}
