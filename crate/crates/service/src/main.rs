use std::net::SocketAddr;
use std::path::PathBuf;

use clap::Parser;
use tag_service::{serve, ServerConfig, DEFAULT_ROW_WIDTH};

/// Serves the documents of a data folder over HTTP/JSON.
#[derive(Debug, Parser)]
#[command(name = "tag-server", version)]
struct Args {
    /// Folder holding .txt/.ann, .conll, .xml and .tax files.
    #[arg(long, env = "TAG_DATA", default_value = "data")]
    data: PathBuf,
    #[arg(long, env = "TAG_BIND", default_value = "127.0.0.1:8080")]
    bind: SocketAddr,
    /// Row width used when a request gives none.
    #[arg(long, env = "TAG_ROW_WIDTH", default_value_t = DEFAULT_ROW_WIDTH)]
    row_width: f64,
}

#[tokio::main]
async fn main() -> std::io::Result<()> {
    tracing_subscriber::fmt()
        .with_env_filter(tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "info".into()))
        .init();
    let args = Args::parse();
    serve(ServerConfig { data: args.data, bind: args.bind, row_width: args.row_width }).await
}
