/** Client-side pre-validation of the two CSV uploads, mirroring the
 * service parsers: uploads with any malformed line never reach the
 * network. */

const QID_RE = /^Q[1-9][0-9]*$/;
const PID_RE = /^(\(-\))?P[1-9][0-9]*$/;

export interface LineError {
  line: number;
  text: string;
  message: string;
}

function validateLines(
  content: string,
  matcher: RegExp,
  what: string,
): { ids: string[]; errors: LineError[] } {
  const ids: string[] = [];
  const errors: LineError[] = [];
  content.split(/\r?\n/).forEach((rawLine, index) => {
    const line = rawLine.trim();
    if (line === "") return;
    if (matcher.test(line)) {
      ids.push(line);
    } else {
      errors.push({ line: index + 1, text: line, message: `not a ${what}` });
    }
  });
  if (ids.length === 0 && errors.length === 0) {
    errors.push({ line: 1, text: "", message: `no ${what}s found` });
  }
  return { ids, errors };
}

export function validateQidFile(content: string) {
  return validateLines(content, QID_RE, "Q-identifier");
}

export function validatePidFile(content: string) {
  return validateLines(content, PID_RE, "P-identifier (PN or (-)PN)");
}

export function isQid(text: string): boolean {
  return QID_RE.test(text.trim());
}
