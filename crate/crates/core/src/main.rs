fn main() -> std::process::ExitCode {
    emhydro::cli::main()
}
