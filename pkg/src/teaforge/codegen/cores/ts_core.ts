// HTTP core for generated TypeScript SDKs: request/response records,
// transports with retry, the Util builtins and model validation.

export class EvalError extends Error {}

export type Violation = [path: string, rule: string, detail: string];

export class ValidationError extends Error {
  constructor(public violations: Violation[], what: string) {
    super(`invalid ${what}: ` + violations.map(([p, r, d]) => `${p || "<value>"}: ${r} (${d})`).join("; "));
  }
}

export class TransportError extends Error {
  constructor(message: string, public attempts: number = 1) {
    super(message);
  }
}

export class Readable {
  private pos = 0;
  constructor(public readonly data: string = "") {}
  read(): string {
    const out = this.data.slice(this.pos);
    this.pos = this.data.length;
    return out;
  }
  copy(): Readable {
    return new Readable(this.data);
  }
}

export type StringMap = { [key: string]: string };

export interface Request {
  method: string;
  pathname: string;
  query: StringMap;
  headers: StringMap;
  body: Readable | null;
}

export interface Response {
  statusCode: number;
  statusMessage: string;
  headers: StringMap;
  body: Readable;
}

export interface HttpExchange {
  protocol: string;
  port: number;
  host: string;
  request: Request;
  response: Response | null;
}

export interface Transport {
  send(exchange: HttpExchange, timeoutMs: number): Promise<Response>;
}

export class Config {
  constructor(
    public retryTimes: number = 0,
    public backoffMs: number = 100,
    public timeoutMs: number = 30000,
    public defaultProtocol: string = "https",
    public defaultPort: number = 443,
  ) {}
}

// --- values -----------------------------------------------------------------

function isMap(v: unknown): v is { [key: string]: unknown } {
  return typeof v === "object" && v !== null && !Array.isArray(v) && !(v instanceof Readable);
}

export function renderScalar(v: unknown): string {
  if (v === null || v === undefined) return "null";
  return String(v);
}

export function eq(a: unknown, b: unknown): boolean {
  if (Array.isArray(a) && Array.isArray(b)) {
    return a.length === b.length && a.every((x, i) => eq(x, b[i]));
  }
  if (isMap(a) && isMap(b)) {
    const ka = Object.keys(a).sort();
    const kb = Object.keys(b).sort();
    return eq(ka, kb) && ka.every((k) => eq(a[k], b[k]));
  }
  return (a ?? null) === (b ?? null);
}

export function plus(a: unknown, b: unknown): any {
  if (typeof a === "string" && typeof b === "string") return a + b;
  if (typeof a === "number" && typeof b === "number") return a + b;
  throw new EvalError(`cannot apply '+' to ${typeof a} and ${typeof b}`);
}

export function truth(v: unknown, op: string): boolean {
  if (typeof v !== "boolean") throw new EvalError(`'${op}' needs boolean operands, got ${renderScalar(v)}`);
  return v;
}

export function hole(v: unknown): string {
  if (v === null || v === undefined) throw new EvalError("null value in template hole");
  if (typeof v === "string" || typeof v === "number" || typeof v === "boolean") return String(v);
  throw new EvalError("cannot interpolate a structured value");
}

export function mapOf(entries: [string, unknown][]): { [key: string]: any } {
  const out: { [key: string]: any } = {};
  for (const [k, v] of entries) {
    Object.defineProperty(out, k, { value: v, enumerable: true, writable: true, configurable: true });
  }
  return out;
}

export function member(obj: unknown, name: string, where: string): any {
  if (obj === null || obj === undefined) throw new EvalError(`null dereference reading '${name}' of ${where}`);
  if (isMap(obj)) return Object.prototype.hasOwnProperty.call(obj, name) ? obj[name] : null;
  throw new EvalError(`cannot read member '${name}' of ${where}`);
}

export function responseField(resp: Response, name: string): any {
  switch (name) {
    case "statusCode":
      return resp.statusCode;
    case "statusMessage":
      return resp.statusMessage;
    case "headers":
      return resp.headers;
    case "body":
      return resp.body;
  }
  throw new EvalError(`__response has no field '${name}'`);
}

export function setMember(obj: unknown, name: string, value: unknown, where: string): void {
  if (obj === null || obj === undefined) throw new EvalError(`null dereference assigning '${name}' of ${where}`);
  if (!isMap(obj)) throw new EvalError(`cannot assign member '${name}' of ${where}`);
  Object.defineProperty(obj, name, { value, enumerable: true, writable: true, configurable: true });
}

// --- Util builtins ----------------------------------------------------------

export function toJSONString(v: unknown): string {
  return JSON.stringify(v);
}

export function parseJSON(text: string): any {
  try {
    return JSON.parse(text);
  } catch (e) {
    throw new EvalError(`invalid JSON: ${(e as Error).message}`);
  }
}

export function readAsString(body: unknown): string {
  if (!(body instanceof Readable)) throw new EvalError("expected a readable body");
  return body.read();
}

export function readAsJSON(body: unknown): any {
  return parseJSON(readAsString(body));
}

export function toReadable(text: string): Readable {
  return new Readable(text);
}

// --- request building -------------------------------------------------------

const REQUEST_FIELDS = ["protocol", "port", "host", "method", "pathname", "query", "headers", "body"];

export class RequestState {
  fields: { [key: string]: any } = { query: {}, headers: {} };

  get(name: string): any {
    if (!REQUEST_FIELDS.includes(name)) throw new EvalError(`__request has no field '${name}'`);
    return this.fields[name] ?? null;
  }

  set(name: string, value: unknown): void {
    if (!REQUEST_FIELDS.includes(name)) throw new EvalError(`__request has no field '${name}'`);
    this.fields[name] = value;
  }

  finish(config: Config): HttpExchange {
    const f = this.fields;
    const protocol = f.protocol ?? config.defaultProtocol;
    if (protocol !== "http" && protocol !== "https") throw new EvalError(`unsupported protocol ${protocol}`);
    const port = f.port ?? config.defaultPort;
    if (typeof port !== "number" || !Number.isInteger(port) || port < 1 || port > 65535) {
      throw new EvalError(`invalid port ${port}`);
    }
    for (const name of ["host", "method", "pathname"]) {
      if (f[name] != null && typeof f[name] !== "string") throw new EvalError(`__request.${name} must be a string`);
    }
    const body = f.body ?? null;
    if (body !== null && !(body instanceof Readable)) throw new EvalError("__request.body must be readable");
    const maps: { [key: string]: StringMap } = {};
    for (const name of ["query", "headers"]) {
      const value = f[name] ?? {};
      if (!isMap(value)) throw new EvalError(`__request.${name} must be a map`);
      for (const [k, v] of Object.entries(value)) {
        if (typeof v !== "string") throw new EvalError(`__request.${name}.${k} must be a string`);
      }
      maps[name] = { ...(value as StringMap) };
    }
    return {
      protocol,
      port,
      host: f.host ?? "",
      request: {
        method: f.method ?? "GET",
        pathname: f.pathname ?? "",
        query: maps.query,
        headers: maps.headers,
        body: body === null ? null : body.copy(),
      },
      response: null,
    };
  }
}

// --- transports -------------------------------------------------------------

function copyExchange(ex: HttpExchange): HttpExchange {
  const r = ex.request;
  return {
    ...ex,
    request: { ...r, query: { ...r.query }, headers: { ...r.headers }, body: r.body ? r.body.copy() : null },
  };
}

export class FetchTransport implements Transport {
  async send(ex: HttpExchange, timeoutMs: number): Promise<Response> {
    const fetchFn = (globalThis as any).fetch;
    const qs = Object.keys(ex.request.query)
      .sort()
      .map((k) => `${encodeURIComponent(k)}=${encodeURIComponent(ex.request.query[k])}`)
      .join("&");
    const url = `${ex.protocol}://${ex.host}:${ex.port}${encodeURI(ex.request.pathname || "/")}${qs ? "?" + qs : ""}`;
    let resp: any;
    try {
      resp = await fetchFn(url, {
        method: ex.request.method,
        headers: ex.request.headers,
        body: ex.request.body ? ex.request.body.data : undefined,
        signal: (globalThis as any).AbortSignal?.timeout?.(timeoutMs),
      });
    } catch (e) {
      throw new TransportError(String(e));
    }
    const headers: StringMap = {};
    resp.headers.forEach((v: string, k: string) => (headers[k] = v));
    return { statusCode: resp.status, statusMessage: resp.statusText, headers, body: new Readable(await resp.text()) };
  }
}

let defaultTransport: Transport | null = null;

export function setDefaultTransport(t: Transport | null): void {
  defaultTransport = t;
}

export function getDefaultTransport(): Transport {
  return defaultTransport ?? new FetchTransport();
}

function pause(ms: number): Promise<void> {
  return new Promise((resolve) => (globalThis as any).setTimeout(resolve, ms));
}

export async function sendWithRetry(transport: Transport, ex: HttpExchange, config: Config): Promise<Response> {
  const attempts = config.retryTimes + 1;
  for (let attempt = 1; ; attempt++) {
    try {
      return await transport.send(copyExchange(ex), config.timeoutMs);
    } catch (e) {
      if (!(e instanceof TransportError)) throw e;
      if (attempt >= attempts) throw new TransportError(`${e.message} (after ${attempt} attempt(s))`, attempt);
      if (config.backoffMs > 0) await pause(config.backoffMs);
    }
  }
}

// --- validation -------------------------------------------------------------

export type TypeDesc = [string] | [string, TypeDesc] | [string, string];

export interface FieldMeta {
  wire: string;
  type: TypeDesc;
  optional: boolean;
  constraints: { pattern?: string; min?: number; max?: number; minLength?: number; maxLength?: number };
}

export interface ModelMeta {
  name: string;
  fields: FieldMeta[];
}

export type ModelRegistry = { [name: string]: ModelMeta };

export function patternMatches(pattern: string, text: string): boolean {
  if (new RegExp(`^(?:${pattern})$`, "u").test(text)) return true;
  const rx = new RegExp(pattern, "uy");
  let pos = 0;
  while (pos < text.length) {
    rx.lastIndex = pos;
    const m = rx.exec(text);
    if (m === null || rx.lastIndex === pos) return false;
    pos = rx.lastIndex;
  }
  return text.length > 0;
}

function typeLabel(t: TypeDesc): string {
  if (t[0] === "map") return `map[string]${typeLabel(t[1] as TypeDesc)}`;
  if (t[0] === "array") return `[${typeLabel(t[1] as TypeDesc)}]`;
  if (t[0] === "model") return t[1] as string;
  return t[0];
}

function valueLabel(v: unknown): string {
  if (v === null || v === undefined) return "null";
  if (Array.isArray(v)) return "array";
  if (isMap(v)) return "map";
  return typeof v;
}

function join(prefix: string, name: string): string {
  return prefix ? `${prefix}.${name}` : name;
}

export function check(t: TypeDesc, v: unknown, path: string, reg: ModelRegistry, out: Violation[]): void {
  let ok: boolean;
  switch (t[0]) {
    case "any":
      return;
    case "void":
      if (v !== null && v !== undefined) out.push([path, "type-mismatch", `expected void, got ${valueLabel(v)}`]);
      return;
    case "string":
      ok = typeof v === "string";
      break;
    case "number":
      ok = typeof v === "number";
      break;
    case "boolean":
      ok = typeof v === "boolean";
      break;
    case "readable":
      ok = typeof v === "string" || v instanceof Readable;
      break;
    case "map":
      ok = isMap(v);
      if (ok) for (const [k, x] of Object.entries(v as object)) check(t[1] as TypeDesc, x, join(path, k), reg, out);
      break;
    case "array":
      ok = Array.isArray(v);
      if (ok) (v as unknown[]).forEach((x, i) => check(t[1] as TypeDesc, x, join(path, String(i)), reg, out));
      break;
    default:
      ok = isMap(v);
      if (ok) checkModel(reg[t[1] as string], v as { [key: string]: unknown }, path, reg, out);
  }
  if (!ok) out.push([path, "type-mismatch", `expected ${typeLabel(t)}, got ${valueLabel(v)}`]);
}

function checkModel(meta: ModelMeta, v: { [key: string]: unknown }, prefix: string, reg: ModelRegistry, out: Violation[]): void {
  for (const f of meta.fields) {
    const path = join(prefix, f.wire);
    const x = v[f.wire];
    if (x === null || x === undefined) {
      if (!f.optional) out.push([path, "missing-required", `required field '${f.wire}' of ${meta.name} is missing`]);
      continue;
    }
    const before = out.length;
    check(f.type, x, path, reg, out);
    if (out.length === before) checkConstraints(f.constraints, x, path, out);
  }
}

function checkConstraints(c: FieldMeta["constraints"], v: unknown, path: string, out: Violation[]): void {
  if (c.pattern !== undefined && (typeof v === "string" || typeof v === "number")) {
    const text = String(v);
    if (!patternMatches(c.pattern, text)) out.push([path, "pattern", `'${text}' does not match '${c.pattern}'`]);
  }
  if (typeof v === "number") {
    if (c.min !== undefined && v < c.min) out.push([path, "min", `${v} < ${c.min}`]);
    if (c.max !== undefined && v > c.max) out.push([path, "max", `${v} > ${c.max}`]);
  }
  if (typeof v === "string" || Array.isArray(v)) {
    if (c.minLength !== undefined && v.length < c.minLength) out.push([path, "min", `length ${v.length} < ${c.minLength}`]);
    if (c.maxLength !== undefined && v.length > c.maxLength) out.push([path, "max", `length ${v.length} > ${c.maxLength}`]);
  }
}

export function checkArgs(api: string, args: [string, unknown, TypeDesc][], reg: ModelRegistry): any[] {
  const out: Violation[] = [];
  const values = args.map(([name, v, t]) => {
    if (v === null || v === undefined) {
      out.push([name, "missing-required", `argument '${name}' is required`]);
      return null;
    }
    const copy = v instanceof Readable ? v.copy() : JSON.parse(JSON.stringify(v));
    check(t, copy, name, reg, out);
    return copy;
  });
  if (out.length) throw new ValidationError(out, `arguments for ${api}`);
  return values;
}

export function result(api: string, v: unknown, t: TypeDesc, reg: ModelRegistry): any {
  const out: Violation[] = [];
  check(t, v, "", reg, out);
  if (out.length) throw new ValidationError(out, `result of ${api}`);
  return v ?? null;
}
