use std::path::Path;
use std::process::Command;

#[test]
fn header_is_current_and_compiles() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR"));
    let header = dir.join("include/abcage.h");
    let text = std::fs::read_to_string(&header).expect("build.rs writes the header");
    for sym in ["abc_model_ladder_new", "abc_evolve", "abc_trace_free", "abc_last_error", "ABC_STATUS_OK"] {
        assert!(text.contains(sym), "{sym} missing from header");
    }

    let src = std::env::temp_dir().join(format!("abcage_header_{}.c", std::process::id()));
    std::fs::write(
        &src,
        "#include \"abcage.h\"\nint main(void) { AbcModel *m = 0; return abc_model_n_chains(m) == 0 ? 0 : 1; }\n",
    )
    .unwrap();
    let status = Command::new("cc")
        .args(["-std=c99", "-Wall", "-Werror", "-fsyntax-only", "-I"])
        .arg(dir.join("include"))
        .arg(&src)
        .status();
    let _ = std::fs::remove_file(&src);
    match status {
        Ok(s) => assert!(s.success(), "header failed to compile"),
        Err(e) => eprintln!("skipping C compile check: {e}"),
    }
}
