fn main() -> std::process::ExitCode {
    photonstats_cli::main_with_args(std::env::args_os())
}
