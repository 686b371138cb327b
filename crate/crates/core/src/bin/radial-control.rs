fn main() -> std::process::ExitCode {
    radial_control::cli::main()
}
