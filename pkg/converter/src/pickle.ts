/**
 * Minimal pickle virtual machine for the upstream citation files.
 *
 * Supports protocols 0-2 (plus the protocol 3/4 opcodes that commonly
 * appear when fixtures are produced by modern Python) and reconstructs the
 * three object kinds those files contain: numpy ndarrays, scipy CSR
 * matrices, and (default)dict graphs. Everything else raises.
 *
 * Python 2 strings (the raw array payloads of the original distribution)
 * arrive as byte strings; dictionary keys are normalized to JS strings or
 * numbers.
 */

export class PickleError extends Error {}

export class NumpyDtype {
  constructor(
    public descr: string,
    public byteorder: string = "=",
  ) {}

  get itemsize(): number {
    const m = /^[a-z](\d+)$/.exec(this.descr);
    if (!m) throw new PickleError(`unsupported dtype '${this.descr}'`);
    return parseInt(m[1], 10);
  }

  get littleEndian(): boolean {
    if (this.byteorder === ">") return false;
    return true; // '<', '=', '|' all read little-endian on this data
  }
}

export class NumpyArray {
  constructor(
    public shape: number[],
    public dtype: NumpyDtype,
    public data: Uint8Array,
    public fortran: boolean,
  ) {}

  get size(): number {
    return this.shape.reduce((a, b) => a * b, 1);
  }

  /** Decode to a plain number array (row-major). */
  toNumbers(): number[] {
    const { descr } = this.dtype;
    const little = this.dtype.littleEndian;
    const itemsize = this.dtype.itemsize;
    const view = new DataView(this.data.buffer, this.data.byteOffset, this.data.byteLength);
    const n = this.size;
    if (this.data.byteLength < n * itemsize) {
      throw new PickleError(`ndarray payload too short: ${this.data.byteLength} < ${n * itemsize}`);
    }
    const out = new Array<number>(n);
    for (let i = 0; i < n; i++) {
      const off = i * itemsize;
      switch (descr) {
        case "f4":
          out[i] = view.getFloat32(off, little);
          break;
        case "f8":
          out[i] = view.getFloat64(off, little);
          break;
        case "i1":
          out[i] = view.getInt8(off);
          break;
        case "u1":
          out[i] = view.getUint8(off);
          break;
        case "i2":
          out[i] = view.getInt16(off, little);
          break;
        case "i4":
          out[i] = view.getInt32(off, little);
          break;
        case "i8": {
          const v = view.getBigInt64(off, little);
          out[i] = Number(v);
          break;
        }
        default:
          throw new PickleError(`unsupported dtype '${descr}'`);
      }
    }
    if (this.fortran && this.shape.length === 2) {
      const [rows, cols] = this.shape;
      const swapped = new Array<number>(n);
      for (let r = 0; r < rows; r++) {
        for (let c = 0; c < cols; c++) swapped[r * cols + c] = out[c * rows + r];
      }
      return swapped;
    }
    return out;
  }
}

export class ScipyCsr {
  constructor(
    public shape: [number, number],
    public data: NumpyArray,
    public indices: NumpyArray,
    public indptr: NumpyArray,
  ) {}

  /** Densify to row-major number rows (fine at citation-network scale). */
  toDenseRows(): number[][] {
    const [rows, cols] = this.shape;
    const data = this.data.toNumbers();
    const indices = this.indices.toNumbers();
    const indptr = this.indptr.toNumbers();
    const out: number[][] = [];
    for (let r = 0; r < rows; r++) {
      const row = new Array<number>(cols).fill(0);
      for (let k = indptr[r]; k < indptr[r + 1]; k++) row[indices[k]] = data[k];
      out.push(row);
    }
    return out;
  }
}

interface Global {
  kind: "global";
  module: string;
  name: string;
}

interface PyObject {
  kind: "object";
  cls: Global;
  args: unknown[];
  state?: unknown;
}

const MARK = Symbol("mark");

function isGlobal(v: unknown): v is Global {
  return typeof v === "object" && v !== null && (v as Global).kind === "global";
}

function latin1(bytes: Uint8Array): string {
  let s = "";
  for (const b of bytes) s += String.fromCharCode(b);
  return s;
}

function asText(v: unknown): string {
  if (typeof v === "string") return v;
  if (v instanceof Uint8Array) return latin1(v);
  throw new PickleError(`expected text, got ${typeof v}`);
}

function asBytes(v: unknown): Uint8Array {
  if (v instanceof Uint8Array) return v;
  if (typeof v === "string") {
    const out = new Uint8Array(v.length);
    for (let i = 0; i < v.length; i++) out[i] = v.charCodeAt(i) & 0xff;
    return out;
  }
  throw new PickleError(`expected bytes, got ${typeof v}`);
}

/** Parse a Python 2 repr-style string literal body (protocol 0 STRING). */
function parsePy2StringLiteral(line: string): Uint8Array {
  if (line.length < 2) throw new PickleError("malformed STRING literal");
  const quote = line[0];
  if ((quote !== "'" && quote !== '"') || line[line.length - 1] !== quote) {
    throw new PickleError("malformed STRING literal quotes");
  }
  const body = line.slice(1, -1);
  const out: number[] = [];
  for (let i = 0; i < body.length; i++) {
    const ch = body[i];
    if (ch !== "\\") {
      out.push(ch.charCodeAt(0) & 0xff);
      continue;
    }
    const next = body[++i];
    switch (next) {
      case "\\": out.push(0x5c); break;
      case "'": out.push(0x27); break;
      case '"': out.push(0x22); break;
      case "n": out.push(0x0a); break;
      case "r": out.push(0x0d); break;
      case "t": out.push(0x09); break;
      case "x": {
        out.push(parseInt(body.slice(i + 1, i + 3), 16));
        i += 2;
        break;
      }
      default: {
        if (next >= "0" && next <= "7") {
          let oct = next;
          while (oct.length < 3 && body[i + 1] >= "0" && body[i + 1] <= "7") oct += body[++i];
          out.push(parseInt(oct, 8) & 0xff);
        } else {
          throw new PickleError(`unsupported escape \\${next}`);
        }
      }
    }
  }
  return Uint8Array.from(out);
}

export class Unpickler {
  private pos = 0;
  private stack: unknown[] = [];
  private memo = new Map<number, unknown>();
  private view: DataView;

  constructor(private buf: Uint8Array) {
    this.view = new DataView(buf.buffer, buf.byteOffset, buf.byteLength);
  }

  load(): unknown {
    for (;;) {
      const op = this.buf[this.pos++];
      if (op === undefined) throw new PickleError("ran out of input");
      const result = this.dispatch(op);
      if (result !== undefined) return result;
    }
  }

  // --- byte readers ------------------------------------------------------

  private bytes(n: number): Uint8Array {
    const out = this.buf.subarray(this.pos, this.pos + n);
    if (out.length !== n) throw new PickleError("truncated pickle");
    this.pos += n;
    return out;
  }

  private line(): string {
    const start = this.pos;
    while (this.buf[this.pos] !== 0x0a) {
      if (this.pos >= this.buf.length) throw new PickleError("unterminated line");
      this.pos++;
    }
    const out = latin1(this.buf.subarray(start, this.pos));
    this.pos++;
    return out;
  }

  private u1(): number { return this.buf[this.pos++]; }
  private u2(): number { const v = this.view.getUint16(this.pos, true); this.pos += 2; return v; }
  private u4(): number { const v = this.view.getUint32(this.pos, true); this.pos += 4; return v; }
  private i4(): number { const v = this.view.getInt32(this.pos, true); this.pos += 4; return v; }
  private u8(): number { const v = this.view.getBigUint64(this.pos, true); this.pos += 8; return Number(v); }

  // --- stack helpers ------------------------------------------------------

  private push(v: unknown) { this.stack.push(v); }

  private pop(): unknown {
    if (this.stack.length === 0) throw new PickleError("stack underflow");
    return this.stack.pop();
  }

  private popToMark(): unknown[] {
    const items: unknown[] = [];
    for (;;) {
      const top = this.pop();
      if (top === MARK) break;
      items.push(top);
    }
    return items.reverse();
  }

  private setItems(target: unknown, pairs: unknown[]) {
    if (!(target instanceof Map)) throw new PickleError("SETITEMS on a non-dict");
    for (let i = 0; i < pairs.length; i += 2) {
      target.set(this.normalizeKey(pairs[i]), pairs[i + 1]);
    }
  }

  private normalizeKey(key: unknown): unknown {
    if (key instanceof Uint8Array) return latin1(key);
    return key;
  }

  // --- opcode dispatch ----------------------------------------------------

  private dispatch(op: number): unknown {
    switch (op) {
      case 0x80: this.u1(); return; // PROTO
      case 0x95: this.bytes(8); return; // FRAME
      case 0x2e: return this.pop(); // STOP '.'

      case 0x28: this.push(MARK); return; // MARK '('
      case 0x30: this.pop(); return; // POP '0'
      case 0x31: this.popToMark(); return; // POP_MARK '1'
      case 0x32: { const v = this.pop(); this.push(v); this.push(v); return; } // DUP

      case 0x4e: this.push(null); return; // NONE 'N'
      case 0x88: this.push(true); return; // NEWTRUE
      case 0x89: this.push(false); return; // NEWFALSE

      case 0x4a: this.push(this.i4()); return; // BININT 'J'
      case 0x4b: this.push(this.u1()); return; // BININT1 'K'
      case 0x4d: this.push(this.u2()); return; // BININT2 'M'
      case 0x8a: this.push(this.long(this.u1())); return; // LONG1
      case 0x8b: this.push(this.long(this.u4())); return; // LONG4
      case 0x49: { // INT 'I' (protocol 0; also encodes py2 bools)
        const text = this.line();
        if (text === "01") this.push(true);
        else if (text === "00") this.push(false);
        else this.push(parseInt(text, 10));
        return;
      }
      case 0x4c: { // LONG 'L'
        const text = this.line().replace(/L$/, "");
        this.push(parseInt(text, 10));
        return;
      }
      case 0x47: { // BINFLOAT 'G' (big-endian)
        const v = this.view.getFloat64(this.pos, false);
        this.pos += 8;
        this.push(v);
        return;
      }
      case 0x46: this.push(parseFloat(this.line())); return; // FLOAT 'F'

      case 0x55: this.push(Uint8Array.from(this.bytes(this.u1()))); return; // SHORT_BINSTRING
      case 0x54: this.push(Uint8Array.from(this.bytes(this.u4()))); return; // BINSTRING
      case 0x43: this.push(Uint8Array.from(this.bytes(this.u1()))); return; // SHORT_BINBYTES
      case 0x42: this.push(Uint8Array.from(this.bytes(this.u4()))); return; // BINBYTES
      case 0x8e: this.push(Uint8Array.from(this.bytes(this.u8()))); return; // BINBYTES8
      case 0x53: this.push(parsePy2StringLiteral(this.line())); return; // STRING 'S'
      case 0x58: { // BINUNICODE 'X'
        const raw = this.bytes(this.u4());
        this.push(new TextDecoder().decode(raw));
        return;
      }
      case 0x8c: { // SHORT_BINUNICODE
        const raw = this.bytes(this.u1());
        this.push(new TextDecoder().decode(raw));
        return;
      }
      case 0x56: this.push(this.line()); return; // UNICODE 'V'

      case 0x5d: this.push([]); return; // EMPTY_LIST ']'
      case 0x6c: this.push(this.popToMark()); return; // LIST 'l'
      case 0x61: { // APPEND 'a'
        const v = this.pop();
        const list = this.stack[this.stack.length - 1];
        if (!Array.isArray(list)) throw new PickleError("APPEND on a non-list");
        list.push(v);
        return;
      }
      case 0x65: { // APPENDS 'e'
        const items = this.popToMark();
        const list = this.stack[this.stack.length - 1];
        if (!Array.isArray(list)) throw new PickleError("APPENDS on a non-list");
        list.push(...items);
        return;
      }

      case 0x29: this.push([]); return; // EMPTY_TUPLE ')'
      case 0x74: this.push(this.popToMark()); return; // TUPLE 't'
      case 0x85: this.push([this.pop()]); return; // TUPLE1
      case 0x86: { const b = this.pop(); const a = this.pop(); this.push([a, b]); return; }
      case 0x87: { const c = this.pop(); const b = this.pop(); const a = this.pop(); this.push([a, b, c]); return; }

      case 0x7d: this.push(new Map()); return; // EMPTY_DICT '}'
      case 0x64: { // DICT 'd'
        const pairs = this.popToMark();
        const map = new Map();
        this.push(map);
        this.setItems(map, pairs);
        return;
      }
      case 0x73: { // SETITEM 's'
        const value = this.pop();
        const key = this.pop();
        this.setItems(this.stack[this.stack.length - 1], [key, value]);
        return;
      }
      case 0x75: { // SETITEMS 'u'
        const pairs = this.popToMark();
        this.setItems(this.stack[this.stack.length - 1], pairs);
        return;
      }

      case 0x71: this.memo.set(this.u1(), this.stack[this.stack.length - 1]); return; // BINPUT 'q'
      case 0x72: this.memo.set(this.u4(), this.stack[this.stack.length - 1]); return; // LONG_BINPUT 'r'
      case 0x94: this.memo.set(this.memo.size, this.stack[this.stack.length - 1]); return; // MEMOIZE
      case 0x70: this.memo.set(parseInt(this.line(), 10), this.stack[this.stack.length - 1]); return; // PUT 'p'
      case 0x68: this.push(this.memoGet(this.u1())); return; // BINGET 'h'
      case 0x6a: this.push(this.memoGet(this.u4())); return; // LONG_BINGET 'j'
      case 0x67: this.push(this.memoGet(parseInt(this.line(), 10))); return; // GET 'g'

      case 0x63: { // GLOBAL 'c'
        const module = this.line();
        const name = this.line();
        this.push({ kind: "global", module, name } satisfies Global);
        return;
      }
      case 0x93: { // STACK_GLOBAL
        const name = asText(this.pop());
        const module = asText(this.pop());
        this.push({ kind: "global", module, name } satisfies Global);
        return;
      }

      case 0x52: { // REDUCE 'R'
        const args = this.pop() as unknown[];
        const callable = this.pop();
        this.push(this.reduce(callable, args));
        return;
      }
      case 0x81: { // NEWOBJ
        const args = this.pop() as unknown[];
        const cls = this.pop();
        this.push(this.reduce(cls, args));
        return;
      }
      case 0x92: { // NEWOBJ_EX
        this.pop(); // kwargs
        const args = this.pop() as unknown[];
        const cls = this.pop();
        this.push(this.reduce(cls, args));
        return;
      }
      case 0x62: { // BUILD 'b'
        const state = this.pop();
        const obj = this.pop();
        this.push(this.build(obj, state));
        return;
      }

      default:
        throw new PickleError(
          `unsupported pickle opcode 0x${op.toString(16)} at offset ${this.pos - 1}`,
        );
    }
  }

  private memoGet(idx: number): unknown {
    if (!this.memo.has(idx)) throw new PickleError(`memo miss: ${idx}`);
    return this.memo.get(idx);
  }

  private long(nbytes: number): number {
    // little-endian two's complement
    const raw = this.bytes(nbytes);
    let value = 0n;
    for (let i = nbytes - 1; i >= 0; i--) value = (value << 8n) | BigInt(raw[i]);
    if (nbytes > 0 && raw[nbytes - 1] & 0x80) value -= 1n << BigInt(8 * nbytes);
    const num = Number(value);
    if (!Number.isSafeInteger(num)) throw new PickleError("integer exceeds safe range");
    return num;
  }

  // --- object reconstruction ---------------------------------------------

  private reduce(callable: unknown, args: unknown[]): unknown {
    if (!isGlobal(callable)) throw new PickleError("REDUCE of a non-global callable");
    const { module, name } = callable;

    if (name === "_reconstruct" && module.endsWith("multiarray")) {
      // numpy.core / numpy._core multiarray._reconstruct(ndarray, (0,), b'b')
      return { kind: "object", cls: callable, args } satisfies PyObject;
    }
    if (module === "numpy" && name === "dtype") {
      const descr = asText(args[0] as Uint8Array | string);
      return new NumpyDtype(descr);
    }
    if (module === "numpy") {
      // numpy.ndarray used as a NEWOBJ class argument
      return { kind: "object", cls: callable, args } satisfies PyObject;
    }
    if (name === "scalar" && module.endsWith("multiarray")) {
      const dtype = args[0] as NumpyDtype;
      const arr = new NumpyArray([1], dtype, asBytes(args[1]), false);
      return arr.toNumbers()[0];
    }
    if (module === "_codecs" && name === "encode") {
      // Python 3 smuggles bytes through protocol 2 as latin-1 text
      const codec = args.length > 1 ? asText(args[1] as string | Uint8Array) : "latin1";
      if (codec !== "latin1" && codec !== "latin-1") {
        throw new PickleError(`unsupported byte codec '${codec}'`);
      }
      return asBytes(args[0]);
    }
    if (module === "collections" && name === "defaultdict") {
      return new Map();
    }
    if (name === "_reconstructor" && (module === "copy_reg" || module === "copyreg")) {
      // copy_reg._reconstructor(cls, base, state): an old-style object shell
      const cls = args[0];
      if (!isGlobal(cls)) throw new PickleError("_reconstructor without a class");
      return { kind: "object", cls, args: [] } satisfies PyObject;
    }
    if (name.endsWith("_matrix") || name.endsWith("_array")) {
      // scipy sparse containers across scipy versions/modules
      return { kind: "object", cls: callable, args } satisfies PyObject;
    }
    throw new PickleError(`cannot reconstruct ${module}.${name}`);
  }

  private build(obj: unknown, state: unknown): unknown {
    if (obj instanceof NumpyDtype) {
      const s = state as unknown[];
      obj.byteorder = asText(s[1] as string | Uint8Array);
      return obj;
    }
    const pyObj = obj as PyObject;
    if (typeof pyObj === "object" && pyObj !== null && pyObj.kind === "object") {
      if (pyObj.cls.name === "ndarray" || asGlobalName(pyObj.args[0]) === "ndarray") {
        // state: (version, shape, dtype, fortran, data)
        const s = state as unknown[];
        const shape = (s[1] as unknown[]).map((d) => Number(d));
        const dtype = s[2] as NumpyDtype;
        const fortran = Boolean(s[3]);
        const data = asBytes(s[4]);
        return new NumpyArray(shape, dtype, data, fortran);
      }
      if (pyObj.cls.name.includes("csr")) {
        const dict = state as Map<unknown, unknown>;
        if (!(dict instanceof Map)) throw new PickleError("csr state is not a dict");
        const shape = (dict.get("_shape") as unknown[]).map((d) => Number(d)) as [number, number];
        return new ScipyCsr(
          shape,
          dict.get("data") as NumpyArray,
          dict.get("indices") as NumpyArray,
          dict.get("indptr") as NumpyArray,
        );
      }
      pyObj.state = state;
      return pyObj;
    }
    throw new PickleError("BUILD on an unsupported object");
  }
}

function asGlobalName(v: unknown): string | null {
  return isGlobal(v) ? v.name : null;
}

export function loads(buf: Uint8Array): unknown {
  return new Unpickler(buf).load();
}
