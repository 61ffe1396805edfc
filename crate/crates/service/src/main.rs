use std::net::SocketAddr;

use clap::Parser;

/// Serve confounding-interval computations over HTTP.
#[derive(Parser)]
#[command(version)]
struct Args {
    /// Address to listen on.
    #[arg(long, env = "CONFINT_BIND", default_value = "127.0.0.1:8080")]
    bind: SocketAddr,
}

#[tokio::main]
async fn main() -> std::io::Result<()> {
    let args = Args::parse();
    let listener = tokio::net::TcpListener::bind(args.bind).await?;
    eprintln!(
        "confint-serve listening on http://{}",
        listener.local_addr()?
    );
    axum::serve(listener, confint_service::router())
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}
