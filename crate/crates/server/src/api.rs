use axum::body::Bytes;
use axum::extract::{Path, State};
use axum::http::{header, HeaderMap, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::Deserialize;
use serde_json::{json, Value};

use easytime::compiler::{compile, disassemble, variable_name, Value as VarValue};
use easytime::model::{from_exchange, AgentId};
use easytime::runtime::{init_race, Disposition, EventError, RaceConfig, TimingEvent, DEFAULT_DEBOUNCE_MS};
use easytime::simulator::EventLog;

use crate::error::ApiError;
use crate::store::{LoggedEvent, RaceMeta};
use crate::{AppState, Race, RaceStatus};

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/models", post(create_model))
        .route("/models/{id}", get(get_model))
        .route("/models/{id}/compile", post(compile_model))
        .route("/races", post(create_race))
        .route("/races/{id}", get(get_race))
        .route("/races/{id}/start", post(start_race))
        .route("/races/{id}/close", post(close_race))
        .route("/races/{id}/events", post(ingest))
        .route("/races/{id}/results", get(results))
        .with_state(state)
}

fn utf8(body: &Bytes) -> Result<&str, ApiError> {
    std::str::from_utf8(body).map_err(|_| ApiError::schema("", "body is not UTF-8"))
}

fn parse_json<T: for<'de> Deserialize<'de>>(body: &Bytes) -> Result<T, ApiError> {
    serde_json::from_slice(body).map_err(|e| ApiError::schema("", e.to_string()))
}

fn json_text(status: StatusCode, body: String) -> Response {
    (status, [(header::CONTENT_TYPE, "application/json")], body).into_response()
}

async fn create_model(State(state): State<AppState>, body: Bytes) -> Result<Response, ApiError> {
    let document = utf8(&body)?;
    let model = from_exchange(document)?;
    let report = model.validate();
    if !report.is_valid() {
        return Err(ApiError::validation(&report));
    }
    let program = compile(&model).map_err(|_| ApiError::validation(&report))?;
    let id = state.insert_model(document.to_string(), program)?;
    Ok((
        StatusCode::CREATED,
        Json(json!({ "id": id, "warnings": report.warnings })),
    )
        .into_response())
}

async fn get_model(State(state): State<AppState>, Path(id): Path<String>) -> Result<Response, ApiError> {
    let model = state.model(&id).ok_or_else(|| ApiError::unknown_model(&id))?;
    Ok(json_text(StatusCode::OK, model.document.clone()))
}

async fn compile_model(State(state): State<AppState>, Path(id): Path<String>) -> Result<Response, ApiError> {
    let model = state.model(&id).ok_or_else(|| ApiError::unknown_model(&id))?;
    Ok((
        [(header::CONTENT_TYPE, "text/plain; charset=utf-8")],
        disassemble(&model.program),
    )
        .into_response())
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct CreateRace {
    model_id: String,
    roster: Vec<u32>,
    debounce_ms: Option<u64>,
}

fn race_summary(id: &str, race: &Race) -> Value {
    json!({
        "id": id,
        "model_id": race.meta.model_id,
        "status": race.meta.status,
        "roster": race.meta.roster,
        "debounce_ms": race.meta.debounce_ms,
        "events": race.events,
    })
}

async fn create_race(State(state): State<AppState>, body: Bytes) -> Result<Response, ApiError> {
    let req: CreateRace = parse_json(&body)?;
    let model = state
        .model(&req.model_id)
        .ok_or_else(|| ApiError::unknown_model(&req.model_id))?;
    let debounce_ms = req.debounce_ms.unwrap_or(DEFAULT_DEBOUNCE_MS);
    let race_state = init_race(model.program.clone(), &req.roster, RaceConfig::with_debounce(debounce_ms))?;
    let meta = RaceMeta {
        model_id: req.model_id,
        roster: req.roster,
        debounce_ms,
        status: RaceStatus::Created,
        created_at_ms: state.now(),
        started_at_ms: None,
    };
    let id = state.insert_race(meta, race_state)?;
    let race = state.race(&id).expect("just inserted");
    let race = race.lock().await;
    Ok((StatusCode::CREATED, Json(race_summary(&id, &race))).into_response())
}

async fn get_race(State(state): State<AppState>, Path(id): Path<String>) -> Result<Response, ApiError> {
    let race = state.race(&id).ok_or_else(|| ApiError::unknown_race(&id))?;
    let race = race.lock().await;
    Ok(Json(race_summary(&id, &race)).into_response())
}

async fn transition(state: &AppState, id: &str, to: RaceStatus) -> Result<Response, ApiError> {
    let race = state.race(id).ok_or_else(|| ApiError::unknown_race(id))?;
    let mut race = race.lock().await;
    let from = race.meta.status;
    let allowed = matches!(
        (from, to),
        (RaceStatus::Created, RaceStatus::Running)
            | (RaceStatus::Created, RaceStatus::Closed)
            | (RaceStatus::Running, RaceStatus::Closed)
    );
    if !allowed {
        return Err(ApiError::invalid_transition(from, to));
    }
    let mut meta = race.meta.clone();
    meta.status = to;
    if to == RaceStatus::Running {
        meta.started_at_ms = Some(state.now());
    }
    state.save_race(id, &meta)?;
    race.meta = meta;
    Ok(Json(race_summary(id, &race)).into_response())
}

async fn start_race(State(state): State<AppState>, Path(id): Path<String>) -> Result<Response, ApiError> {
    transition(&state, &id, RaceStatus::Running).await
}

async fn close_race(State(state): State<AppState>, Path(id): Path<String>) -> Result<Response, ApiError> {
    transition(&state, &id, RaceStatus::Closed).await
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct EventBody {
    ts_ms: Option<u64>,
    bib: u32,
    mp: u32,
    agent: u32,
}

fn value_json(v: VarValue) -> Value {
    match v {
        VarValue::Time(t) => json!(t),
        VarValue::Count(n) => json!(n),
    }
}

fn authorized(state: &AppState, headers: &HeaderMap) -> bool {
    headers
        .get(header::AUTHORIZATION)
        .and_then(|v| v.to_str().ok())
        .and_then(|v| v.strip_prefix("Bearer "))
        .is_some_and(|t| t == state.0.token)
}

/// Runs one event through the race and logs it. Hard errors leave no trace
/// in the log and consume no sequence number.
fn apply(state: &AppState, race: &mut Race, body: EventBody) -> Result<Value, ApiError> {
    let stamped = body.ts_ms.is_none();
    let timestamp = match body.ts_ms {
        Some(ts) => ts,
        None => {
            if !race.state.program.agents.contains(&AgentId(body.agent)) {
                return Err(ApiError::event(&EventError::UnknownAgent(body.agent)));
            }
            if !race.is_manual(body.agent) {
                return Err(ApiError::timestamp_required(body.agent));
            }
            race.stamp(state.now())
        }
    };
    let event = TimingEvent {
        timestamp,
        competitor: body.bib,
        mp: body.mp,
        agent: body.agent,
        seq: race.events,
    };
    let disposition = race.state.apply_event(event).map_err(|e| ApiError::event(&e))?;
    let accepted = matches!(disposition, Disposition::Accepted(_));
    let entry = LoggedEvent {
        event,
        received_at_ms: state.now(),
        stamped,
    };
    state.append(race, &entry, accepted)?;

    let program = race.state.program.clone();
    let (reason, effects) = match disposition {
        Disposition::Accepted(effects) => (Value::Null, effects),
        Disposition::Rejected(r) => (json!(r.to_string()), Vec::new()),
    };
    let effects: Vec<Value> = effects
        .iter()
        .map(|e| {
            json!({
                "bib": e.bib,
                "var": variable_name(&program, e.var),
                "old": value_json(e.old),
                "new": value_json(e.new),
            })
        })
        .collect();
    Ok(json!({
        "seq": event.seq,
        "accepted": accepted,
        "reason": reason,
        "effects": effects,
        "server_stamped": stamped,
        "ts_ms": timestamp,
    }))
}

fn is_text(headers: &HeaderMap) -> bool {
    headers
        .get(header::CONTENT_TYPE)
        .and_then(|v| v.to_str().ok())
        .is_some_and(|v| v.starts_with("text/plain"))
}

/// Accepts one JSON event, or with `Content-Type: text/plain` a batch of
/// event-log lines applied in order.
async fn ingest(
    State(state): State<AppState>,
    Path(id): Path<String>,
    headers: HeaderMap,
    body: Bytes,
) -> Result<Response, ApiError> {
    if !authorized(&state, &headers) {
        return Err(ApiError::unauthorized());
    }
    let race = state.race(&id).ok_or_else(|| ApiError::unknown_race(&id))?;

    if is_text(&headers) {
        let log = EventLog::parse(utf8(&body)?)
            .map_err(|e| ApiError::schema(&format!("line {}", e.line), e.message))?;
        let mut race = race.lock().await;
        if race.meta.status != RaceStatus::Running {
            return Err(ApiError::not_running(race.meta.status));
        }
        let mut records = Vec::with_capacity(log.events.len());
        for e in log.events {
            let body = EventBody {
                ts_ms: Some(e.timestamp),
                bib: e.competitor,
                mp: e.mp,
                agent: e.agent,
            };
            match apply(&state, &mut race, body) {
                Ok(record) => records.push(record),
                Err(err) if err.status == StatusCode::UNPROCESSABLE_ENTITY => records.push(err.body),
                Err(err) => return Err(err),
            }
        }
        return Ok(Json(json!({ "records": records })).into_response());
    }

    let body: EventBody = parse_json(&body)?;
    let mut race = race.lock().await;
    if race.meta.status != RaceStatus::Running {
        return Err(ApiError::not_running(race.meta.status));
    }
    Ok(Json(apply(&state, &mut race, body)?).into_response())
}

async fn results(State(state): State<AppState>, Path(id): Path<String>) -> Result<Response, ApiError> {
    let race = state.race(&id).ok_or_else(|| ApiError::unknown_race(&id))?;
    let mut race = race.lock().await;
    let body = match &race.results {
        Some(body) => body.clone(),
        None => {
            let body = std::sync::Arc::new(
                serde_json::to_string(&race.state.results()).expect("results serialize"),
            );
            race.results = Some(body.clone());
            body
        }
    };
    Ok(json_text(StatusCode::OK, body.as_str().to_owned()))
}
