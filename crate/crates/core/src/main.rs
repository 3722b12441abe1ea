fn main() -> std::process::ExitCode {
    diracflow::cli::main_with_args(std::env::args_os())
}
