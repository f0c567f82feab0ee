fn main() {
    let crate_dir = std::env::var("CARGO_MANIFEST_DIR").unwrap();
    println!("cargo:rerun-if-changed=src/lib.rs");
    cbindgen::Builder::new()
        .with_crate(&crate_dir)
        .with_language(cbindgen::Language::C)
        .with_cpp_compat(true)
        .with_include_guard("JETVIBER_H")
        .with_header("/* C interface to the jetviber symbolic engine. */")
        .generate()
        .expect("cbindgen generates the C header")
        .write_to_file(std::path::Path::new(&crate_dir).join("include/jetviber.h"));
}
