fn main() {
    // System OpenBLAS carries the LAPACK symbols (zheev, zgeqrf, ...) we bind in linalg.rs.
    println!("cargo:rustc-link-lib=dylib=openblas");
}
