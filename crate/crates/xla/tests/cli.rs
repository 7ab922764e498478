//! End-to-end checks of the command-line binary: every subcommand is a
//! thin shim over the library, with the documented exit codes.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn xla(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_xla"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn read(path: &Path) -> String {
    std::fs::read_to_string(path).unwrap()
}

const EYE2: &str = "%%MatrixMarket matrix coordinate integer general\n\
                    %%field: modular 101\n\
                    2 2 2\n\
                    1 1 1\n\
                    2 2 1\n";

const B2: &str = "%%MatrixMarket matrix array integer general\n\
                  %%field: modular 101\n\
                  2 2\n5\n7\n11\n13\n";

#[test]
fn mul_identity_reproduces_operand() {
    let dir = tempfile::tempdir().unwrap();
    let eye = write(dir.path(), "eye.mtx", EYE2);
    let b = write(dir.path(), "b.mtx", B2);
    let out = dir.path().join("c.mtx");
    let r = xla(
        &[
            "mul",
            eye.to_str().unwrap(),
            b.to_str().unwrap(),
            "--field",
            "zp:101",
            "-o",
            out.to_str().unwrap(),
        ],
        dir.path(),
    );
    assert_eq!(r.status.code(), Some(0), "{}", String::from_utf8_lossy(&r.stderr));
    assert_eq!(read(&out), B2);
}

#[test]
fn forced_methods_agree_byte_for_byte() {
    let dir = tempfile::tempdir().unwrap();
    // 5x5 operands exercise peeling under the recursive method
    let mut body_a = String::from("%%MatrixMarket matrix array integer general\n%%field: modular 101\n5 5\n");
    let mut body_b = body_a.clone();
    for i in 0..25 {
        body_a.push_str(&format!("{}\n", (i * 37 + 11) % 101));
        body_b.push_str(&format!("{}\n", (i * 53 + 29) % 101));
    }
    let a = write(dir.path(), "a.mtx", &body_a);
    let b = write(dir.path(), "b.mtx", &body_b);
    let out1 = dir.path().join("c1.mtx");
    let out2 = dir.path().join("c2.mtx");
    for (method, out) in [("base", &out1), ("winograd", &out2)] {
        let r = xla(
            &[
                "mul",
                a.to_str().unwrap(),
                b.to_str().unwrap(),
                "--field",
                "zp:101",
                "--method",
                method,
                "--threshold",
                "1",
                "-o",
                out.to_str().unwrap(),
            ],
            dir.path(),
        );
        assert_eq!(r.status.code(), Some(0), "{}", String::from_utf8_lossy(&r.stderr));
    }
    assert_eq!(read(&out1), read(&out2));
}

#[test]
fn dimension_mismatch_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let a = write(
        dir.path(),
        "a.mtx",
        "%%MatrixMarket matrix array integer general\n%%field: modular 101\n2 3\n1\n2\n3\n4\n5\n6\n",
    );
    let b = write(dir.path(), "b.mtx", B2);
    let r = xla(
        &[
            "mul",
            a.to_str().unwrap(),
            b.to_str().unwrap(),
            "--field",
            "zp:101",
            "-o",
            "-",
        ],
        dir.path(),
    );
    assert_eq!(r.status.code(), Some(2));
    assert!(!r.stderr.is_empty());
}

#[test]
fn parse_error_exits_1_with_line_number() {
    let dir = tempfile::tempdir().unwrap();
    let a = write(dir.path(), "a.mtx", "%%Nope\n");
    let b = write(dir.path(), "b.mtx", B2);
    let r = xla(
        &[
            "mul",
            a.to_str().unwrap(),
            b.to_str().unwrap(),
            "--field",
            "zp:101",
            "-o",
            "-",
        ],
        dir.path(),
    );
    assert_eq!(r.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&r.stderr).contains("line 1"));
}

#[test]
fn integer_field_routes_to_bignum_product() {
    let dir = tempfile::tempdir().unwrap();
    let big = "123456789123456789123456789";
    let a = write(
        dir.path(),
        "a.mtx",
        &format!("%%MatrixMarket matrix array integer general\n%%field: integer\n1 1\n{big}\n"),
    );
    let b = write(
        dir.path(),
        "b.mtx",
        "%%MatrixMarket matrix array integer general\n%%field: integer\n1 1\n-2\n",
    );
    let r = xla(
        &[
            "mul",
            a.to_str().unwrap(),
            b.to_str().unwrap(),
            "--field",
            "int",
            "-o",
            "-",
        ],
        dir.path(),
    );
    assert_eq!(r.status.code(), Some(0), "{}", String::from_utf8_lossy(&r.stderr));
    let stdout = String::from_utf8_lossy(&r.stdout);
    assert!(stdout.contains("-246913578246913578246913578"), "{stdout}");
}

#[test]
fn convert_round_trip_is_identity() {
    let dir = tempfile::tempdir().unwrap();
    // canonical dense file: no explicit zeros issue, array form
    let dense_text = "%%MatrixMarket matrix array integer general\n\
                      %%field: modular 13\n\
                      2 3\n1\n0\n2\n5\n0\n6\n";
    let dense = write(dir.path(), "dense.mtx", dense_text);
    let csr = dir.path().join("sparse.mtx");
    let back = dir.path().join("back.mtx");
    let r = xla(
        &[
            "convert",
            dense.to_str().unwrap(),
            "--to",
            "csr",
            "-o",
            csr.to_str().unwrap(),
        ],
        dir.path(),
    );
    assert_eq!(r.status.code(), Some(0));
    let r = xla(
        &[
            "convert",
            csr.to_str().unwrap(),
            "--to",
            "dense",
            "-o",
            back.to_str().unwrap(),
        ],
        dir.path(),
    );
    assert_eq!(r.status.code(), Some(0));
    assert_eq!(read(&back), dense_text);
}

#[test]
fn spmv_matches_direct_product() {
    let dir = tempfile::tempdir().unwrap();
    let a = write(
        dir.path(),
        "a.mtx",
        "%%MatrixMarket matrix coordinate integer general\n\
         %%field: modular 97\n\
         3 3 4\n\
         1 1 2\n\
         1 3 5\n\
         2 2 1\n\
         3 1 96\n",
    );
    let x = write(
        dir.path(),
        "x.mtx",
        "%%MatrixMarket matrix array integer general\n%%field: modular 97\n3 1\n1\n2\n3\n",
    );
    // A x = (2+15, 2, -1) = (17, 2, 96)
    let expect = "%%MatrixMarket matrix array integer general\n%%field: modular 97\n3 1\n17\n2\n96\n";
    for format in ["auto", "coo", "csr", "hyb"] {
        let out = dir.path().join(format!("y_{format}.mtx"));
        let r = xla(
            &[
                "spmv",
                a.to_str().unwrap(),
                x.to_str().unwrap(),
                "--format",
                format,
                "-o",
                out.to_str().unwrap(),
            ],
            dir.path(),
        );
        assert_eq!(r.status.code(), Some(0), "{}", String::from_utf8_lossy(&r.stderr));
        assert_eq!(read(&out), expect, "format {format}");
    }
    // transpose apply: A^T x = (2-3, 2, 5) = (96, 2, 5)
    let out = dir.path().join("left.mtx");
    let r = xla(
        &[
            "spmv",
            a.to_str().unwrap(),
            x.to_str().unwrap(),
            "--side",
            "left",
            "-o",
            out.to_str().unwrap(),
        ],
        dir.path(),
    );
    assert_eq!(r.status.code(), Some(0));
    assert_eq!(
        read(&out),
        "%%MatrixMarket matrix array integer general\n%%field: modular 97\n3 1\n96\n2\n5\n"
    );
}

#[test]
fn bench_expands_size_grid() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("bench.csv");
    let gp = dir.path().join("bench.gp");
    let r = xla(
        &[
            "bench",
            "--op",
            "mul",
            "--field",
            "zp:101",
            "--sizes",
            "4:16:*2",
            "--reps",
            "1",
            "--warmup",
            "0",
            "--csv",
            csv.to_str().unwrap(),
            "--gnuplot",
            gp.to_str().unwrap(),
        ],
        dir.path(),
    );
    assert_eq!(r.status.code(), Some(0), "{}", String::from_utf8_lossy(&r.stderr));
    let text = read(&csv);
    for n in [4, 8, 16] {
        assert!(text.contains(&format!("\"base\",{n},0,")), "missing n={n}:\n{text}");
        assert!(text.contains(&format!("\"winograd\",{n},0,")));
    }
    assert!(!text.contains("\"base\",32,"));
    let script = read(&gp);
    assert_eq!(script.matches("title \"base\"").count(), 1);
    assert_eq!(script.matches("title \"winograd\"").count(), 1);
}

#[test]
fn tune_writes_config_and_flags_degenerate_grids() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("xla.conf");
    let r = xla(
        &[
            "tune",
            "--op",
            "mul",
            "--field",
            "zp:101",
            "--sizes",
            "4:32:*2",
            "--reps",
            "1",
            "--out",
            out.to_str().unwrap(),
        ],
        dir.path(),
    );
    assert_eq!(r.status.code(), Some(0), "{}", String::from_utf8_lossy(&r.stderr));
    let conf = read(&out);
    assert!(conf.starts_with("mul.threshold = "), "{conf}");

    // three grid points cannot support the two-parameter fits
    let r = xla(
        &[
            "tune",
            "--op",
            "mul",
            "--field",
            "zp:101",
            "--sizes",
            "4:16:*2",
            "--reps",
            "1",
            "--out",
            out.to_str().unwrap(),
        ],
        dir.path(),
    );
    assert_eq!(r.status.code(), Some(4));
}

#[test]
fn regress_round_trip_of_bench_output() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("bench.csv");
    let r = xla(
        &[
            "bench",
            "--op",
            "spmv",
            "--field",
            "zp:97",
            "--sizes",
            "8:16:*2",
            "--reps",
            "2",
            "--csv",
            csv.to_str().unwrap(),
        ],
        dir.path(),
    );
    assert_eq!(r.status.code(), Some(0), "{}", String::from_utf8_lossy(&r.stderr));
    // a run compared against itself always passes
    let r = xla(
        &[
            "regress",
            "--baseline",
            csv.to_str().unwrap(),
            "--current",
            csv.to_str().unwrap(),
            "--tol",
            "0.0",
        ],
        dir.path(),
    );
    assert_eq!(r.status.code(), Some(0), "{}", String::from_utf8_lossy(&r.stderr));
    assert!(String::from_utf8_lossy(&r.stdout).contains("PASS"));
}

#[test]
fn config_file_sets_default_threshold() {
    let dir = tempfile::tempdir().unwrap();
    let conf = write(dir.path(), "tuned.conf", "mul.threshold = 2\n");
    let a = write(dir.path(), "a.mtx", EYE2);
    let b = write(dir.path(), "b.mtx", B2);
    let out = dir.path().join("c.mtx");
    let r = Command::new(env!("CARGO_BIN_EXE_xla"))
        .args([
            "mul",
            a.to_str().unwrap(),
            b.to_str().unwrap(),
            "--field",
            "zp:101",
            "-o",
            out.to_str().unwrap(),
        ])
        .env("XLA_CONFIG", conf.to_str().unwrap())
        .current_dir(dir.path())
        .output()
        .unwrap();
    assert_eq!(r.status.code(), Some(0), "{}", String::from_utf8_lossy(&r.stderr));
    assert_eq!(read(&out), B2);
}
