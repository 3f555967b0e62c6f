import { parseAssignOutput, runAssign, WireAssignRow } from "./engine.js";
import {
  AssignArrays,
  AssignConfig,
  BatchHandle,
  BoundaryError,
  LossTermsInput,
  TIER_DET_ONLY,
  TIER_E2E,
} from "./types.js";
import { validateBatch } from "./validate.js";

export * from "./types.js";
export { batchToJsonl, parseAssignOutput } from "./engine.js";

function rowToArrays(row: WireAssignRow): AssignArrays {
  const n = row.pairs.length;
  const out: AssignArrays = {
    imageId: row.image_id,
    studentIdx: new Int32Array(n),
    teacherIdx: new Int32Array(n),
    tier: new Uint8Array(n),
    alpha: new Float64Array(n),
    beta: new Float64Array(n),
    diou: new Float64Array(n),
    disparity: new Float64Array(n),
    costTotal: new Float64Array(n),
    dropped: Int32Array.from(row.dropped),
  };
  row.pairs.forEach((pair, i) => {
    out.studentIdx[i] = pair.student;
    out.teacherIdx[i] = pair.teacher;
    out.tier[i] = pair.tier === "e2e" ? TIER_E2E : TIER_DET_ONLY;
    out.alpha[i] = pair.alpha;
    out.beta[i] = pair.beta;
    out.diou[i] = pair.diou;
    out.disparity[i] = pair.disparity;
    out.costTotal[i] = pair.cost.total;
  });
  return out;
}

/**
 * Match a batch of teacher/student predictions and return tier plus
 * modulation-factor arrays per image. The buffers are validated up front;
 * the engine is never entered on a shape violation.
 */
export function bindAssign(batch: BatchHandle, config: AssignConfig = {}): AssignArrays[] {
  validateBatch(batch);
  if (batch.teacher.length === 0) {
    return [];
  }
  return runAssign(batch.teacher, batch.student, config).map(rowToArrays);
}

export function goldenToArrays(goldenText: string): AssignArrays[] {
  return parseAssignOutput(goldenText).map(rowToArrays);
}

/**
 * Overall loss given per-pair base losses and the factor arrays of one
 * image: omegaSup*lSup + omegaUnsup*(sum cls) + omegaUnsup*(sum beta*reg
 * + alpha*rec), recognition only for end-to-end pairs.
 */
export function unsupervisedLoss(
  terms: LossTermsInput,
  factors: AssignArrays,
  reduction: "sum" | "mean" = "sum"
): number {
  const n = factors.alpha.length;
  if (terms.cls.length !== n || terms.reg.length !== n || terms.rec.length !== n) {
    throw new BoundaryError(
      "terms",
      `per-pair loss lists must cover ${n} pairs, got ${terms.cls.length}/${terms.reg.length}/${terms.rec.length}`
    );
  }
  const omegaSup = terms.omegaSup ?? 1.0;
  const omegaUnsup = terms.omegaUnsup ?? 2.0;
  let cls = 0;
  let reg = 0;
  let rec = 0;
  for (let i = 0; i < n; i++) {
    cls += terms.cls[i];
    reg += factors.beta[i] * terms.reg[i];
    if (factors.tier[i] === TIER_E2E) {
      rec += factors.alpha[i] * terms.rec[i];
    }
  }
  if (reduction === "mean" && n > 0) {
    cls /= n;
    reg /= n;
    rec /= n;
  }
  return omegaSup * terms.lSup + omegaUnsup * cls + omegaUnsup * (reg + rec);
}
