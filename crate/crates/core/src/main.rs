fn main() -> std::process::ExitCode {
    eqgen::cli::main()
}
