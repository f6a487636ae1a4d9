use std::path::PathBuf;
use std::process::{Command, Output};

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core/tests/fixtures").join(name)
}

fn rpys(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rpys")).args(args).output().unwrap()
}

fn stdout(output: &Output) -> String {
    assert!(output.status.success(), "{}", String::from_utf8_lossy(&output.stderr));
    String::from_utf8(output.stdout.clone()).unwrap()
}

#[test]
fn standard_matches_golden_csv() {
    // golden file produced by a standalone Python tally + statistics.median
    let golden = std::fs::read_to_string(
        PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden/ten_records_standard.csv"),
    )
    .unwrap();
    let out = rpys(&["standard", fixture("ten_records.txt").to_str().unwrap()]);
    assert_eq!(stdout(&out), golden);
}

#[test]
fn empty_range_corpus_is_all_zero() {
    let out = rpys(&["standard", fixture("two_years.txt").to_str().unwrap(), "--from", "1900", "--to", "1910"]);
    let text = stdout(&out);
    assert_eq!(text.lines().count(), 12);
    assert!(text.lines().skip(1).all(|l| l.ends_with(",0,0")));
}

#[test]
fn multi_single_cpy_matches_standard() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("one_year.txt");
    std::fs::write(&input, "PY 2013\nCR A, 1980, X\n   B, 1980, Y\n   C, 1978, Z\nER\nPY 2013\nCR A, 1982, X\nER\n").unwrap();
    let input = input.to_str().unwrap();
    let standard = stdout(&rpys(&["standard", input, "--from", "1975", "--to", "1985"]));
    let multi = stdout(&rpys(&["multi", input, "--from", "1975", "--to", "1985"]));
    let multi_rows: Vec<String> = multi
        .lines()
        .skip(1)
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            assert_eq!(f[0], "2013");
            assert_eq!(f[4].split('.').nth(1).unwrap().len(), 6);
            format!("{},{},{}", f[1], f[2], f[3])
        })
        .collect();
    let standard_rows: Vec<&str> = standard.lines().skip(1).collect();
    assert_eq!(multi_rows, standard_rows);
    assert_eq!(multi.lines().next(), Some("cpy,rpy,count,deviation,rank"));
}

#[test]
fn table_empty_query_lists_every_variant() {
    let out = rpys(&["table", fixture("three_records.txt").to_str().unwrap()]);
    let text = stdout(&out);
    // 15 references, VAN FRAASSEN B. x2, KUHN 1970 x2, LEWIS x2 -> 12 variants
    assert_eq!(text.lines().count(), 1 + 12);
    assert_eq!(text.lines().next(), Some("author,rpy,source,times,link"));
}

#[test]
fn table_query_sort_and_limit() {
    let path = fixture("two_years.txt");
    let out = rpys(&["table", path.to_str().unwrap(), "--query", "RPY1980 fra", "--sort", "times", "--dir", "desc", "--limit", "2", "--format", "json"]);
    let json: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(json["total_matches"], 3);
    let times: Vec<_> = json["rows"].as_array().unwrap().iter().map(|r| r["times"].as_u64().unwrap()).collect();
    assert_eq!(times, [4, 3]);

    let out = rpys(&["table", path.to_str().unwrap(), "--mode", "multi", "-q", "fra CPY2011", "--sort", "author", "--dir", "asc"]);
    let text = stdout(&out);
    let authors: Vec<&str> = text.lines().skip(1).map(|l| l.split(',').next().unwrap()).collect();
    assert_eq!(authors, ["VAN FRAASSEN B", "VAN FRAASSEN B.", "VAN FRASSEN B."]);
    assert!(text.starts_with("author,rpy,source,times,cpy,link\n"));
}

#[test]
fn writes_to_out_path() {
    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("series.json");
    let out = rpys(&["standard", fixture("three_records.txt").to_str().unwrap(), "--format", "json", "--out", out_path.to_str().unwrap()]);
    assert!(out.status.success());
    assert!(out.stdout.is_empty());
    let json: serde_json::Value = serde_json::from_slice(&std::fs::read(out_path).unwrap()).unwrap();
    assert_eq!(json["rows"][80]["count"], 4);
}

#[test]
fn failures_exit_nonzero_without_stdout() {
    let out = rpys(&["standard", "/definitely/missing.txt"]);
    assert!(!out.status.success());
    assert!(out.stdout.is_empty());
    assert!(String::from_utf8_lossy(&out.stderr).contains("cannot open"));

    let dir = tempfile::tempdir().unwrap();
    let empty = dir.path().join("empty.txt");
    std::fs::write(&empty, "").unwrap();
    let out = rpys(&["multi", empty.to_str().unwrap()]);
    assert!(!out.status.success());
    assert!(out.stdout.is_empty());
    assert!(String::from_utf8_lossy(&out.stderr).contains("records_parsed"));

    let out = rpys(&["table", fixture("three_records.txt").to_str().unwrap(), "--sort", "year"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("author, rpy, source, times, cpy"));

    let out = rpys(&["standard", fixture("three_records.txt").to_str().unwrap(), "--from", "1999", "--to", "1900"]);
    assert!(!out.status.success());

    let out = rpys(&["standard", fixture("three_records.txt").to_str().unwrap(), "--max-bytes", "10"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("size limit of 10 bytes"));
}

#[test]
fn diagnostics_go_to_stderr() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("messy.txt");
    std::fs::write(&input, "PY 2000\nCR A, 1950, X\n   \n?? junk\nER\n").unwrap();
    let out = rpys(&["standard", input.to_str().unwrap()]);
    let text = stdout(&out);
    assert!(text.starts_with("year,count,deviation\n"));
    assert_eq!(text.lines().count(), 101);
    assert!(String::from_utf8_lossy(&out.stderr).contains("2 malformed line(s)"));
}
