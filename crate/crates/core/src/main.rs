fn main() -> std::process::ExitCode {
    bnmtf::cli::main_with(std::env::args_os())
}
