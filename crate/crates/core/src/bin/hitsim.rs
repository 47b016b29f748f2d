fn main() -> std::process::ExitCode {
    hitsim::cli::main()
}
