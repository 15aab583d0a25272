use metric_glue::cli;

fn main() {
    std::process::exit(cli::entry());
}
