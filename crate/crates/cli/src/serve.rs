//! Transports for the session protocol: newline-delimited JSON over any
//! reader/writer pair, and HTTP with a single POST endpoint.

use std::io::{self, BufRead, Write};
use std::net::SocketAddr;
use std::sync::Arc;

use axum::extract::State;
use axum::http::StatusCode;
use axum::routing::post;
use axum::Router;

use crate::protocol::Service;

/// One response line per non-blank request line, until end of input.
pub fn serve_lines(svc: &Service, input: impl BufRead, mut output: impl Write) -> io::Result<()> {
    for line in input.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        writeln!(output, "{}", svc.handle_line(&line))?;
        output.flush()?;
    }
    Ok(())
}

async fn rpc(State(svc): State<Arc<Service>>, body: String) -> (StatusCode, [(&'static str, &'static str); 1], String) {
    let reply = tokio::task::spawn_blocking(move || svc.handle_line(&body))
        .await
        .unwrap_or_else(|e| format!("{{\"id\":null,\"error\":{{\"code\":\"BadRequest\",\"message\":\"{e}\"}}}}"));
    (StatusCode::OK, [("content-type", "application/json")], reply)
}

/// `POST /rpc` takes one request object and answers one response object.
pub fn router(svc: Arc<Service>) -> Router {
    Router::new().route("/rpc", post(rpc)).with_state(svc)
}

pub async fn serve_http(svc: Arc<Service>, listener: tokio::net::TcpListener) -> io::Result<()> {
    axum::serve(listener, router(svc)).await
}

/// Binds `addr` and serves until the process ends.
pub fn run_http(svc: Service, addr: SocketAddr) -> io::Result<()> {
    let rt = tokio::runtime::Runtime::new()?;
    rt.block_on(async move {
        let listener = tokio::net::TcpListener::bind(addr).await?;
        eprintln!("listening on http://{}/rpc", listener.local_addr()?);
        serve_http(Arc::new(svc), listener).await
    })
}
