fn main() {
    std::process::exit(ncr_sim_cli::parse_and_run(std::env::args_os()));
}
