fn main() -> std::process::ExitCode {
    hyperspec::cli::main_with_args(std::env::args_os())
}
