import { spawnSync } from "node:child_process";
import { mkdtempSync, readFileSync, rmSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";

import { AssignConfig, EngineError, ImageBatch } from "./types.js";

function pythonExecutable(): string {
  return process.env.SPOTMATCH_PYTHON ?? "python3";
}

function engineEnv(): NodeJS.ProcessEnv {
  const env = { ...process.env };
  const extra = process.env.SPOTMATCH_PYTHONPATH;
  if (extra) {
    env.PYTHONPATH = env.PYTHONPATH ? `${extra}:${env.PYTHONPATH}` : extra;
  }
  return env;
}

function instanceToWire(batch: ImageBatch, i: number): Record<string, unknown> {
  const stride = 4 * batch.kPoints;
  const polygon: number[][] = [];
  for (let p = 0; p < 2 * batch.kPoints; p++) {
    polygon.push([
      batch.polygons[i * stride + 2 * p],
      batch.polygons[i * stride + 2 * p + 1],
    ]);
  }
  const row: Record<string, unknown> = {
    polygon,
    score: batch.scores[i],
    transcription: batch.transcriptions[i],
    char_conf: Array.from(batch.charConfs[i]),
  };
  const dist = batch.charDists?.[i];
  if (dist != null && batch.distShape) {
    const [rows, cols] = batch.distShape;
    const matrix: number[][] = [];
    for (let r = 0; r < rows; r++) {
      matrix.push(Array.from(dist.subarray(r * cols, (r + 1) * cols)));
    }
    row.char_dists = matrix;
  }
  return row;
}

export function batchToJsonl(images: ImageBatch[]): string {
  const lines = images.map((img) =>
    JSON.stringify({
      image_id: img.imageId,
      width: img.width,
      height: img.height,
      instances: Array.from({ length: img.nInstances }, (_, i) => instanceToWire(img, i)),
    })
  );
  return lines.join("\n") + (lines.length ? "\n" : "");
}

function configFlags(config: AssignConfig): string[] {
  const flags: string[] = [];
  if (config.tDet !== undefined) flags.push("--t-det", String(config.tDet));
  if (config.tRec !== undefined) flags.push("--t-rec", String(config.tRec));
  if (config.lambdaScale !== undefined) flags.push("--lambda-scale", String(config.lambdaScale));
  if (config.stage !== undefined) flags.push("--stage", config.stage);
  if (config.kO2m !== undefined) flags.push("--k", String(config.kO2m));
  if (config.weights !== undefined) flags.push("--weights", config.weights.join(","));
  if (config.enableCc === false) flags.push("--no-cc");
  if (config.reduction !== undefined) flags.push("--reduction", config.reduction);
  if (config.alphabetPath !== undefined) flags.push("--alphabet", config.alphabetPath);
  if (config.textFallback) flags.push("--text-fallback");
  return flags;
}

export interface WireAssignRow {
  image_id: string;
  det_only: [number, number][];
  e2e: [number, number][];
  dropped: number[];
  pairs: {
    student: number;
    teacher: number;
    tier: "det_only" | "e2e";
    alpha: number;
    beta: number;
    diou: number;
    disparity: number;
    cost: { cls: number; text: number; coord: number; total: number };
  }[];
}

export function runAssign(
  teacher: ImageBatch[],
  student: ImageBatch[],
  config: AssignConfig
): WireAssignRow[] {
  const dir = mkdtempSync(join(tmpdir(), "spotmatch-"));
  try {
    const teacherPath = join(dir, "teacher.jsonl");
    const studentPath = join(dir, "student.jsonl");
    const outPath = join(dir, "out.jsonl");
    writeFileSync(teacherPath, batchToJsonl(teacher));
    writeFileSync(studentPath, batchToJsonl(student));
    const result = spawnSync(
      pythonExecutable(),
      ["-m", "spotmatch", "assign", teacherPath, studentPath, "--out", outPath, ...configFlags(config)],
      { env: engineEnv(), encoding: "utf-8" }
    );
    if (result.error) {
      throw result.error;
    }
    if (result.status !== 0) {
      throw new EngineError(result.status ?? -1, result.stderr ?? "");
    }
    return parseAssignOutput(readFileSync(outPath, "utf-8"));
  } finally {
    rmSync(dir, { recursive: true, force: true });
  }
}

export function parseAssignOutput(text: string): WireAssignRow[] {
  const rows: WireAssignRow[] = [];
  for (const line of text.split("\n")) {
    if (!line.trim()) continue;
    const obj = JSON.parse(line);
    if (obj.spotmatch_header) continue;
    rows.push(obj as WireAssignRow);
  }
  return rows;
}
