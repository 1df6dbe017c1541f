fn main() {
    std::process::exit(colorcount_workbench::cli::run(std::env::args_os()));
}
