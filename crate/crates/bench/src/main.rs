fn main() {
    std::process::exit(hsi_tensor_bench::cli::run(std::env::args_os()));
}
