fn main() {
    std::process::exit(rankbench_cli::app::run());
}
