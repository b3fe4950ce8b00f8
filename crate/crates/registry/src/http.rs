use std::future::Future;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Query, State};
use axum::http::header::{ACCEPT, CONTENT_TYPE, ETAG, IF_NONE_MATCH, LOCATION};
use axum::http::{HeaderMap, HeaderValue, StatusCode, Uri};
use axum::response::{IntoResponse, Response};
use axum::routing::get;
use axum::{Json, Router};
use i40sh_core::query::QueryResult;
use i40sh_core::vocab::VOCABULARY_TTL;
use i40sh_core::{serialize_turtle, Iri, ParseDiagnostic};
use serde::Deserialize;
use serde_json::json;
use tokio::net::TcpListener;

use crate::store::{QueryError, RegisterError, Registry};

pub const TURTLE: &str = "text/turtle; charset=utf-8";
pub const VERSION_HEADER: &str = "vocabulary-version";

pub fn router(registry: Arc<Registry>) -> Router {
    Router::new()
        .route("/components", get(list).post(register))
        .route("/sparql", axum::routing::post(sparql))
        .route("/vocabulary", get(vocabulary))
        .route("/resource", get(resource))
        .route("/component/{*local}", get(dereference))
        .route("/{*path}", get(dereference))
        .with_state(registry)
}

/// Serves until `shutdown` resolves.
pub async fn serve(
    listener: TcpListener,
    registry: Arc<Registry>,
    shutdown: impl Future<Output = ()> + Send + 'static,
) -> std::io::Result<()> {
    axum::serve(listener, router(registry))
        .with_graceful_shutdown(shutdown)
        .await
}

fn turtle(status: StatusCode, body: String) -> Response {
    (status, [(CONTENT_TYPE, TURTLE)], body).into_response()
}

fn diagnostics(status: StatusCode, error: &str, diags: &[ParseDiagnostic]) -> Response {
    (
        status,
        Json(json!({ "error": error, "diagnostics": diags })),
    )
        .into_response()
}

fn not_found(what: &str) -> Response {
    (
        StatusCode::NOT_FOUND,
        Json(json!({ "error": format!("no description of {what}") })),
    )
        .into_response()
}

/// Whether any media range in `Accept` admits Turtle. A missing header
/// accepts everything.
pub fn accepts_turtle(headers: &HeaderMap) -> bool {
    let Some(accept) = headers.get(ACCEPT) else {
        return true;
    };
    let Ok(accept) = accept.to_str() else {
        return false;
    };
    accept.split(',').any(|range| {
        let mut parts = range.split(';').map(str::trim);
        let media = parts.next().unwrap_or_default().to_ascii_lowercase();
        let refused = parts.any(|p| {
            p.strip_prefix("q=")
                .and_then(|q| q.parse::<f32>().ok())
                .is_some_and(|q| q == 0.0)
        });
        !refused && matches!(media.as_str(), "text/turtle" | "text/*" | "*/*")
    })
}

async fn list(State(registry): State<Arc<Registry>>) -> Response {
    Json(registry.list_shells()).into_response()
}

async fn register(State(registry): State<Arc<Registry>>, body: Bytes) -> Response {
    let Ok(text) = std::str::from_utf8(&body) else {
        return (
            StatusCode::BAD_REQUEST,
            Json(json!({ "error": "body is not UTF-8" })),
        )
            .into_response();
    };
    match registry.register(text) {
        Ok(done) => {
            let location = HeaderValue::from_str(done.shells[0].as_str())
                .expect("IRIs are valid header values");
            let warnings: Vec<_> = done
                .warnings
                .iter()
                .map(|f| json!({"rule": f.rule_id, "focus": f.focus.to_string(), "message": f.message}))
                .collect();
            (
                StatusCode::CREATED,
                [(LOCATION, location)],
                Json(json!({ "shells": done.shells.iter().map(Iri::as_str).collect::<Vec<_>>(), "warnings": warnings })),
            )
                .into_response()
        }
        Err(RegisterError::Parse(d)) => {
            diagnostics(StatusCode::BAD_REQUEST, "document does not parse", &d)
        }
        Err(RegisterError::Rejected(report)) => {
            (StatusCode::UNPROCESSABLE_ENTITY, Json(report.to_json())).into_response()
        }
    }
}

fn describe(registry: &Registry, iri: &str, headers: &HeaderMap) -> Response {
    if !accepts_turtle(headers) {
        let accept = headers
            .get(ACCEPT)
            .and_then(|v| v.to_str().ok())
            .unwrap_or_default();
        return (
            StatusCode::NOT_ACCEPTABLE,
            format!("only text/turtle is served; Accept was {accept:?}\n"),
        )
            .into_response();
    }
    let Ok(iri) = Iri::new(iri) else {
        return not_found(iri);
    };
    match registry.dereference(&iri) {
        Some(g) => turtle(StatusCode::OK, serialize_turtle(&g)),
        None => not_found(iri.as_str()),
    }
}

/// Maps the raw (still percent-encoded) request path onto the base IRI.
async fn dereference(
    State(registry): State<Arc<Registry>>,
    uri: Uri,
    headers: HeaderMap,
) -> Response {
    let path = uri.path();
    let local = path
        .strip_prefix("/component/")
        .unwrap_or_else(|| path.trim_start_matches('/'));
    let iri = format!("{}{local}", registry.base_iri().as_str());
    describe(&registry, &iri, &headers)
}

#[derive(Deserialize)]
struct ResourceParams {
    iri: String,
}

async fn resource(
    State(registry): State<Arc<Registry>>,
    Query(params): Query<ResourceParams>,
    headers: HeaderMap,
) -> Response {
    describe(&registry, &params.iri, &headers)
}

async fn sparql(State(registry): State<Arc<Registry>>, body: Bytes) -> Response {
    let text = String::from_utf8_lossy(&body);
    match registry.query(&text) {
        Ok(QueryResult::Solutions(rows)) => Json(rows.to_json()).into_response(),
        Ok(QueryResult::Graph(g)) => turtle(StatusCode::OK, serialize_turtle(&g)),
        Err(QueryError::Parse(d)) => {
            diagnostics(StatusCode::BAD_REQUEST, "query does not parse", &d)
        }
        Err(QueryError::Unsupported(d)) => {
            diagnostics(StatusCode::UNPROCESSABLE_ENTITY, &d[0].message, &d)
        }
    }
}

fn etag_matches(headers: &HeaderMap, etag: &str) -> bool {
    headers
        .get_all(IF_NONE_MATCH)
        .iter()
        .filter_map(|v| v.to_str().ok())
        .flat_map(|v| v.split(','))
        .map(str::trim)
        .any(|tag| tag == "*" || tag == etag)
}

async fn vocabulary(State(registry): State<Arc<Registry>>, headers: HeaderMap) -> Response {
    let version = &registry.vocabulary().version;
    let etag = format!("\"{version}\"");
    let validators = [
        (
            ETAG,
            HeaderValue::from_str(&etag).expect("version is header-safe"),
        ),
        (
            VERSION_HEADER.parse().expect("static header name"),
            HeaderValue::from_str(version).expect("version is header-safe"),
        ),
    ];
    if etag_matches(&headers, &etag) {
        return (StatusCode::NOT_MODIFIED, validators).into_response();
    }
    (
        StatusCode::OK,
        validators,
        [(CONTENT_TYPE, TURTLE)],
        VOCABULARY_TTL,
    )
        .into_response()
}
