use std::process::ExitCode;

/// Large planes are freed and reallocated at every pipeline stage. By
/// default glibc serves them with fresh mmaps and returns them to the
/// kernel on free, so every stage pays to fault its pages in again.
#[cfg(all(target_os = "linux", target_env = "gnu"))]
fn keep_freed_pages() {
    const LIMIT: libc::c_int = 1 << 30;
    // SAFETY: mallopt only adjusts allocator tunables and runs before any
    // other thread exists.
    unsafe {
        libc::mallopt(libc::M_MMAP_THRESHOLD, LIMIT);
        libc::mallopt(libc::M_TRIM_THRESHOLD, LIMIT);
        libc::mallopt(libc::M_TOP_PAD, LIMIT / 2);
    }
}

#[cfg(not(all(target_os = "linux", target_env = "gnu")))]
fn keep_freed_pages() {}

fn main() -> ExitCode {
    keep_freed_pages();
    dogfuse_cli::main_with_args(std::env::args_os()).into()
}
