fn main() -> std::process::ExitCode {
    combwalk::cli::main()
}
