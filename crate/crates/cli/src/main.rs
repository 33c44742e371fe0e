fn main() -> std::process::ExitCode {
    pcaselect_cli::main()
}
