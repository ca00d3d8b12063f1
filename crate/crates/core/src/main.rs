fn main() {
    std::process::exit(advdialog::cli::run_main());
}
