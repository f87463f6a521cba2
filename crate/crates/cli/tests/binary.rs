use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use autoed::report::{read_csv, ImageRow, VariantRow};
use autoed_core::image::{load_gray, save_raster};
use autoed_core::GrayImage;

fn mini() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/mini")
}

fn autoed(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_autoed")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn detect_defaults_and_auto() {
    let tmp = tempfile::tempdir().unwrap();
    let image = mini().join("images/0001.pgm");
    let out = tmp.path().join("e.png");
    let o = autoed(&["detect", path(&image), "--out", path(&out)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    assert!(text.contains("mode=manual\n"));
    assert!(text.contains("grad_thr=50\n") && text.contains("anchor_thr=10\n") && text.contains("gk=9\n"));
    assert_eq!(load_gray(&out).unwrap().width(), 96);
    assert!(tmp.path().join("e.txt").exists());

    let o = autoed(&["detect", path(&image), "--auto", "--operator", "prewitt", "--out", path(&tmp.path().join("a.pgm"))]);
    assert!(o.status.success());
    let text = stdout(&o);
    let value = |k: &str| -> f64 {
        text.lines().find_map(|l| l.strip_prefix(&format!("{k}="))).unwrap().parse().unwrap()
    };
    assert_eq!(value("grad_thr"), 0.5 * value("t_otsu"));
    assert_eq!(value("anchor_thr"), 0.067 * value("t_otsu"));
    assert_eq!(value("si"), 1.0);
}

#[test]
fn detect_failures_exit_nonzero() {
    let o = autoed(&["detect", "/nonexistent/x.pgm"]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("error"));
    let image = mini().join("images/0001.pgm");
    assert!(!autoed(&["detect", path(&image), "--auto", "--grad-thr", "5"]).status.success());
    assert!(!autoed(&["detect", path(&image), "--operator", "roberts"]).status.success());
}

#[test]
fn config_file_with_flag_override() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("run.cfg");
    std::fs::write(&cfg, "# tuned\noperator=scharr\ngk=5\ngrad-thr=30\n").unwrap();
    let image = mini().join("images/0002.pgm");
    let out = tmp.path().join("e.pgm");
    let o = autoed(&["detect", path(&image), "--config", path(&cfg), "--gk", "7", "--out", path(&out)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    assert!(text.contains("operator=scharr\n"));
    assert!(text.contains("gk=7\n"));
    assert!(text.contains("grad_thr=30\n"));

    std::fs::write(&cfg, "colour=red\n").unwrap();
    assert!(!autoed(&["detect", path(&image), "--config", path(&cfg)]).status.success());
}

#[test]
fn eval_exit_status_follows_failures() {
    let tmp = tempfile::tempdir().unwrap();
    let gt = mini().join("gt");
    let csv = tmp.path().join("eval.csv");
    let o = autoed(&["eval", path(&gt), path(&gt), "--out", path(&csv)]);
    assert!(o.status.success());
    assert!(stdout(&o).lines().last().unwrap().contains(" f1=1.000 "));
    assert_eq!(read_csv::<ImageRow>(&csv).unwrap().len(), 8);

    let pred = tmp.path().join("pred");
    std::fs::create_dir_all(&pred).unwrap();
    save_raster(&GrayImage::filled(10, 10, 0).unwrap(), pred.join("0001.pgm")).unwrap();
    let o = autoed(&["eval", path(&pred), path(&gt)]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("0001"));
}

#[test]
fn sweep_and_compare_write_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let sweep_out = tmp.path().join("s");
    let o = autoed(&[
        "sweep",
        path(&mini()),
        "--operators",
        "sobel,kroon",
        "--gk",
        "7:9:2",
        "--gt",
        "40,60",
        "--ta",
        "10",
        "--si",
        "1",
        "--jobs",
        "2",
        "--out",
        path(&sweep_out),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).starts_with("variants=8 rows=64 "));
    assert_eq!(read_csv::<VariantRow>(&sweep_out.join("sweep.csv")).unwrap().len(), 8);

    let cmp_out = tmp.path().join("c");
    let o = autoed(&["compare", path(&mini()), "--operator", "sobel,kayyali", "--out", path(&cmp_out)]);
    assert!(o.status.success());
    let table = stdout(&o);
    assert_eq!(table.lines().count(), 6);
    assert!(table.contains("original") && table.contains("proposed"));
    assert_eq!(read_csv::<VariantRow>(&cmp_out.join("compare.csv")).unwrap().len(), 4);
}
