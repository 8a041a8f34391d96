use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use proptest::prelude::*;
use tempfile::TempDir;

use subspace_sets::eval::spearman;
use subspace_sets::Subspace;

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_subspace-sets"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    assert!(o.status.success(), "stderr: {}", String::from_utf8_lossy(&o.stderr));
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn write(dir: &TempDir, name: &str, contents: &str) -> String {
    let p = dir.path().join(name);
    fs::write(&p, contents).unwrap();
    p.to_str().unwrap().to_owned()
}

#[test]
fn algebra_member_prints_the_score() {
    let dir = TempDir::new().unwrap();
    let v = write(&dir, "v.txt", &format!("{} {} 0\n", 1.0 / 2f64.sqrt(), 1.0 / 2f64.sqrt()));
    let e1 = write(&dir, "e1.txt", "1 0 0\n");
    let sub = dir.path().join("s.txt");
    stdout(&run(&["algebra", "span", &e1, "--out", sub.to_str().unwrap()]));
    let out = stdout(&run(&["algebra", "member", &v, sub.to_str().unwrap()]));
    assert_eq!(out, "0.707106781\n");
}

#[test]
fn algebra_union_intersect_complement() {
    let dir = TempDir::new().unwrap();
    let e1 = write(&dir, "e1.txt", "1 0 0\n");
    let e2 = write(&dir, "e2.txt", "0 1 0\n");
    let (a, b) = (dir.path().join("a.sub"), dir.path().join("b.sub"));
    stdout(&run(&["algebra", "span", &e1, "--out", a.to_str().unwrap()]));
    stdout(&run(&["algebra", "span", &e2, "--out", b.to_str().unwrap()]));
    let (a, b) = (a.to_str().unwrap(), b.to_str().unwrap());

    let u = Subspace::read_from(stdout(&run(&["algebra", "union", a, b])).as_bytes()).unwrap();
    assert_eq!(u.rank(), 2);
    let i = stdout(&run(&["algebra", "intersect", a, b]));
    assert_eq!(i, "subspace 3 0\n");
    let c = Subspace::read_from(stdout(&run(&["algebra", "complement", a])).as_bytes()).unwrap();
    assert_eq!(c.rank(), 2);
    assert!(c.approx_eq(&Subspace::span_rows(3, &[vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0]]).unwrap(), 1e-12).unwrap());
}

#[test]
fn sts_writes_report_and_pairs() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("out");
    let printed = stdout(&run(&[
        "sts",
        "--pairs",
        fixture("pairs.tsv").to_str().unwrap(),
        "--embeddings",
        fixture("sentences.tsv").to_str().unwrap(),
        "--method",
        "subspace_bertscore",
        "--metric",
        "F",
        "--weighting",
        "uniform",
        "--out",
        out.to_str().unwrap(),
    ]));
    let report = fs::read_to_string(out.join("report.tsv")).unwrap();
    assert_eq!(printed, report);
    let mut lines = report.lines();
    assert_eq!(lines.next().unwrap(), "method\tweighting\tmetric\tspearman_rho\tn_pairs");
    let row: Vec<&str> = lines.next().unwrap().split('\t').collect();
    assert_eq!(&row[..3], &["subspace_bertscore", "uniform", "F"]);
    assert_eq!(row[4], "5");
    let pairs = fs::read_to_string(out.join("pairs.tsv")).unwrap();
    assert_eq!(pairs.lines().count(), 5);
    assert!(pairs.starts_with("p1\t0.500000000\t0.763441362\t0.604255476\n"));
}

fn retrieval_files(dir: &TempDir) -> (String, String) {
    let emb = write(
        dir,
        "emb.txt",
        "apple 1 0.1 0\npear 0.9 0.2 0.1\nplum 0.8 0 0.3\ncar 0 1 0.1\nbus 0.1 0.9 0\ntruck 0 0.8 0.4\n",
    );
    let data = write(dir, "sets.txt", "set fruit\nspan apple\ntest pear plum\n\nset vehicle\nspan car\ntest bus truck\n");
    (emb, data)
}

#[test]
fn retrieve_fuzzy_equals_near_for_single_span_words() {
    let dir = TempDir::new().unwrap();
    let (emb, data) = retrieval_files(&dir);
    let report = |method: &str| {
        let out = dir.path().join(method);
        stdout(&run(&[
            "retrieve", "--dataset", &data, "--embeddings", &emb, "--format", "glove_text", "--method", method, "--k",
            "1", "--k", "2", "--out", out.to_str().unwrap(),
        ]));
        fs::read_to_string(out.join("retrieval.tsv")).unwrap()
    };
    let fuzzy = report("fuzzy");
    let near = report("near");
    assert_eq!(fuzzy.replace("fuzzy", "near"), near);
    assert!(fuzzy.starts_with("set_name\tmethod\tR@1\tR@2\tmedian\nfruit\tfuzzy\t0.500000\t1.000000\t1.5\n"));
    assert!(fuzzy.contains("__macro_pooled__"));
}

#[test]
fn gen_setops_is_deterministic() {
    let dir = TempDir::new().unwrap();
    let mut data = String::new();
    for k in 0..4 {
        let ids: Vec<String> = (2 * k..2 * k + 12).map(|i| format!("w{i}")).collect();
        data.push_str(&format!("set s{k}\nspan {}\ntest {}\n\n", ids[..5].join(" "), ids[5..].join(" ")));
    }
    let data = write(&dir, "sets.txt", &data);
    let gen = |seed: &str, name: &str| {
        let out = dir.path().join(name);
        stdout(&run(&[
            "gen-setops", "--dataset", &data, "--op", "intersect", "--seed", seed, "--count", "3", "--intersect-min",
            "6", "--out", out.to_str().unwrap(),
        ]));
        fs::read_to_string(out).unwrap()
    };
    let a = gen("7", "a.txt");
    assert_eq!(a, gen("7", "b.txt"));
    let sets = subspace_sets::retrieval::read_dataset(a.as_bytes()).unwrap();
    assert_eq!(sets.len(), 3);
    assert!(sets.iter().all(|s| s.name.contains('&') && s.span_words.len() == 5));
}

#[test]
fn exit_codes() {
    let dir = TempDir::new().unwrap();
    // Usage errors.
    assert_eq!(run(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(run(&["sts", "--pairs", "x"]).status.code(), Some(2));
    let o = run(&[
        "sts",
        "--pairs",
        fixture("pairs.tsv").to_str().unwrap(),
        "--embeddings",
        fixture("sentences.tsv").to_str().unwrap(),
        "--method",
        "avg_cos",
        "--metric",
        "P",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2));
    // Data errors.
    let o = run(&["algebra", "complement", fixture("bad_subspace_line3.txt").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 3"));
    let missing = dir.path().join("missing.txt");
    assert_eq!(run(&["algebra", "complement", missing.to_str().unwrap()]).status.code(), Some(3));
}

proptest! {
    #[test]
    fn spearman_ignores_monotone_transforms(xs in prop::collection::vec(-100.0f64..100.0, 3..20), seed in any::<u64>()) {
        let ys: Vec<f64> = xs.iter().enumerate().map(|(i, x)| x.sin() + (i as u64 ^ seed) as f64 % 7.0).collect();
        prop_assume!(xs.iter().any(|&x| x != xs[0]) && ys.iter().any(|&y| y != ys[0]));
        let base = spearman(&xs, &ys).unwrap();
        let tx: Vec<f64> = xs.iter().map(|x| (x / 50.0).exp() * 3.0 - 1.0).collect();
        let ty: Vec<f64> = ys.iter().map(|y| y.powi(3)).collect();
        prop_assert_eq!(spearman(&tx, &ty).unwrap(), base);
    }
}
