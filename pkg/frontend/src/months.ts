// YYYY-MM helpers; the service speaks calendar months on the wire.

const MONTH_RE = /^\d{4}-(0[1-9]|1[0-2])$/;

export function isValidMonth(text: string): boolean {
  return MONTH_RE.test(text);
}

/** Calendar comparison; inputs must be valid YYYY-MM strings. */
export function compareMonths(a: string, b: string): number {
  return a < b ? -1 : a > b ? 1 : 0;
}

function toIndex(month: string): number {
  const year = Number(month.slice(0, 4));
  const mon = Number(month.slice(5, 7));
  return year * 12 + (mon - 1);
}

function fromIndex(index: number): string {
  const year = Math.floor(index / 12);
  const mon = (index % 12) + 1;
  return `${String(year).padStart(4, "0")}-${String(mon).padStart(2, "0")}`;
}

/** Inclusive sequence of months from `from` to `to`. */
export function monthSequence(from: string, to: string): string[] {
  const out: string[] = [];
  for (let i = toIndex(from); i <= toIndex(to); i++) out.push(fromIndex(i));
  return out;
}
